"""Exact calculator for amalgamated free products of finite and semifinite algebras.

Algebras are formal direct sums of matrix blocks, diffuse hyperfinite
summands and interpolated free group factors. Products A *_D B over an
atomic type I subalgebra D are computed by rewrite rules applied to a
running description, with free and regulated dimension bookkeeping.
"""

from __future__ import annotations

from .algebra import AlgebraDesc, ProjectionSpec, Summand
from .embedding import AtomicSubalgebra, DBlock, EmbeddingSpec
from .exactnum import DimValue, ExtScalar
from .exceptions import EngineError, ParseError, ShapeMismatch, ValidationError, VnaError
from .product import (
    ProductResult,
    check_compression_consistency,
    closed_form_product,
    compute_product,
    product_general,
)

__all__ = [
    "AlgebraDesc",
    "AtomicSubalgebra",
    "DBlock",
    "DimValue",
    "EmbeddingSpec",
    "EngineError",
    "ExtScalar",
    "ParseError",
    "ProductResult",
    "ProjectionSpec",
    "ShapeMismatch",
    "Summand",
    "ValidationError",
    "VnaError",
    "check_compression_consistency",
    "closed_form_product",
    "compute_product",
    "product_general",
]
