"""Rewrite rules for a corner qMq of the running product.

Each rule takes the corner N (summand labels are those of the ambient
product) and returns the pieces of the new corner together with, for each
old summand label, the trace of q's part in that summand that flows into
each piece. The engine uses those feeds to extend the rewrite from the
corner back to the whole algebra.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import (
    AlgebraDesc,
    ProjectionSpec,
    Summand,
    rescale_trace,
    validate_projection,
)
from .const import (
    EMBED_CREATED,
    EMBED_STANDARD,
    EMBED_SUBSTANDARD,
    RULE_COMPLETE,
    RULE_CORNER,
    RULE_GLUE,
    RULE_M2,
    RULE_PEEL,
    RULE_SPLIT,
)
from .dimension import rdim
from .exactnum import INF, DimKind, DimOp, DimValue, ExtScalar, dim_combine
from .exceptions import EngineError

_LOGGER = logging.getLogger(__name__)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class CornerPiece:
    """One summand of a rewritten corner and the traces feeding it."""

    summand: Summand
    feeds: Mapping[str, Fraction]


@dataclass(frozen=True)
class CornerRewrite:
    """The result of a corner rule.

    ``copies`` gives, for each new projection created by a split, its trace
    in each piece (by piece index).
    """

    pieces: tuple[CornerPiece, ...]
    rule: str
    embedding: str
    copies: tuple[Mapping[int, Fraction], ...] = field(default=())

    def as_algebra(self) -> AlgebraDesc:
        return AlgebraDesc(tuple(piece.summand for piece in self.pieces))


def _finite(value: ExtScalar) -> Fraction:
    if value.is_infinite:
        raise EngineError("corner rules need finite traces")
    return value.finite()


def _totals(n: AlgebraDesc) -> dict[str, Fraction]:
    return {summand.label: _finite(summand.total_trace) for summand in n.summands}


def _remainder_feeds(n: AlgebraDesc, atoms: Sequence[CornerPiece]) -> dict[str, Fraction]:
    feeds = _totals(n)
    for atom in atoms:
        for label, amount in atom.feeds.items():
            feeds[label] -= amount
    return {label: amount for label, amount in feeds.items() if amount > 0}


def _matrix_dimension(n: AlgebraDesc) -> int | None:
    if not all(summand.is_matrix for summand in n.summands):
        return None
    return sum(int(_finite(summand.size)) ** 2 for summand in n.summands)


def _remainder(
    n: AlgebraDesc, atoms: Sequence[CornerPiece], dim: DimValue, hyperfinite: bool, rule: str
) -> CornerPiece | None:
    """The non-atomic piece left after removing ``atoms`` from the corner."""
    feeds = _remainder_feeds(n, atoms)
    trace = sum(feeds.values(), Fraction(0))
    if trace == 0:
        if dim != DimValue.of(0):
            raise EngineError(f"{rule}: empty remainder with nonzero dimension {dim}")
        return None
    if hyperfinite:
        if dim != DimValue.of(0):
            raise EngineError(f"{rule}: hyperfinite remainder with dimension {dim}")
        return CornerPiece(Summand.diffuse(trace, "F"), feeds)
    return CornerPiece(Summand.free_factor(positive_s(dim, rule), trace, "F"), feeds)


def positive_s(dim: DimValue, rule: str) -> ExtScalar:
    """Convert a regulated dimension into the s of a free factor."""
    if dim.kind is DimKind.POS_INF:
        return INF
    if not dim.is_finite:
        raise EngineError(f"{rule}: free factor dimension {dim} is not positive")
    if dim.value <= 0:
        raise EngineError(f"{rule}: free factor dimension {dim} is not positive")
    return ExtScalar.of(dim.value)


def is_minimal_central(n: AlgebraDesc, p: ProjectionSpec) -> bool:
    """True when p is the whole of a one-dimensional summand of n."""
    nonzero = [i for i, amount in enumerate(p.allocation) if not amount.is_zero]
    if len(nonzero) != 1:
        return False
    summand = n.summands[nonzero[0]]
    return summand.is_matrix and summand.size.finite() == 1 and p.allocation[nonzero[0]] == summand.total_trace


def complement(n: AlgebraDesc, p: ProjectionSpec) -> ProjectionSpec:
    """1 - p."""
    return ProjectionSpec(
        tuple(summand.total_trace - amount for summand, amount in zip(n.summands, p.allocation, strict=True))
    )


def m2_corner(n: AlgebraDesc, p: ProjectionSpec) -> CornerRewrite:
    """Adjoin a partial isometry from p to 1 - p when both have half the trace.

    The corner is normalized to trace 1, matrix summands wholly under p are
    paired with those wholly under 1 - p, pairs whose normalized minimal
    traces per size add to more than 1/2 give matrix summands, and the rest
    forms one diffuse piece (hyperfinite only when n is 4-dimensional).
    """
    errors = validate_projection(n, p)
    if errors:
        raise EngineError("; ".join(errors))
    total = _finite(n.total_trace)
    if _finite(p.total) * 2 != total:
        raise EngineError(f"m2: projection trace {p.total} is not half of {total}")
    q = complement(n, p)
    if is_minimal_central(n, p) or is_minimal_central(n, q):
        raise EngineError("m2: an endpoint is a minimal central projection")

    scale = 1 / total
    normalized = rescale_trace(n, scale)
    under_p = []
    under_q = []
    for summand, amount in zip(normalized.summands, p.allocation, strict=True):
        if not summand.is_matrix:
            continue
        ratio = _finite(summand.minimal_trace) / _finite(summand.size)
        if amount.is_zero:
            under_q.append((summand, ratio))
        elif amount * scale == summand.total_trace:
            under_p.append((summand, ratio))

    atoms = []
    for first, first_ratio in under_p:
        for second, second_ratio in under_q:
            excess = first_ratio + second_ratio - HALF
            if excess <= 0:
                continue
            sizes = _finite(first.size) * _finite(second.size)
            minimal = sizes * excess * total
            share = sizes * minimal
            atoms.append(
                CornerPiece(
                    Summand.matrix(2 * sizes, minimal, f"K{len(atoms) + 1}"),
                    {first.label: share, second.label: share},
                )
            )

    atom_dim = sum((_finite(atom.summand.minimal_trace) ** 2 for atom in atoms), Fraction(0))
    dim = dim_combine(rdim(n), DimValue.of(total * total / 4 + atom_dim), DimOp.ADD)
    remainder = _remainder(n, atoms, dim, _matrix_dimension(n) == 4, RULE_M2)
    pieces = ([remainder] if remainder else []) + atoms
    _LOGGER.debug("m2 on %s: %d atoms, remainder %s", n, len(atoms), remainder and remainder.summand)
    return CornerRewrite(tuple(pieces), RULE_M2, _growth_flag(n))


def m2_rewrite(n: AlgebraDesc, p: ProjectionSpec) -> AlgebraDesc:
    """Return the algebra generated by n and a partial isometry from p to 1 - p."""
    return m2_corner(n, p).as_algebra()


def glue_or_m2(n: AlgebraDesc, p: ProjectionSpec) -> CornerRewrite:
    """m2_corner, recorded as a glue step when n is a single free factor."""
    rewrite = m2_corner(n, p)
    if all(summand.is_free_factor for summand in n.summands):
        return CornerRewrite(rewrite.pieces, RULE_GLUE, EMBED_STANDARD)
    return rewrite


def amplify_corner(n: AlgebraDesc, minimal_label: str) -> CornerRewrite:
    """Adjoin a partial isometry from the one-dimensional summand ``minimal_label``.

    The corner becomes M_2 tensor the other endpoint's corner: each other
    summand doubles and the minimal summand is spread over them.
    """
    minimal = n.summand(minimal_label)
    if not (minimal.is_matrix and minimal.size.finite() == 1):
        raise EngineError(f"{minimal_label} is not a one-dimensional summand")
    if _finite(n.total_trace) != 2 * _finite(minimal.total_trace):
        raise EngineError("corner: endpoint traces differ")
    pieces = []
    for summand in n.summands:
        if summand.label == minimal_label:
            continue
        amount = _finite(summand.total_trace)
        if summand.is_matrix:
            grown = Summand.matrix(summand.size * 2, summand.minimal_trace, summand.label)
        elif summand.is_free_factor:
            grown = Summand.free_factor(summand.s, 2 * amount, summand.label)
        else:
            grown = Summand.diffuse(2 * amount, summand.label)
        pieces.append(CornerPiece(grown, {summand.label: amount, minimal_label: amount}))
    return CornerRewrite(tuple(pieces), RULE_CORNER, _growth_flag(n))


def split_corner(n: AlgebraDesc, weights: Sequence[Fraction]) -> CornerRewrite:
    """Free product of the corner with an abelian algebra of the given weights.

    A matrix summand with minimal trace m and size k (inside the corner of
    trace a) meets a weight w in a matrix summand when m/k + w > a; that
    summand has size k and minimal trace m + k(w - a). The rest is one
    diffuse piece, hyperfinite only for two weights against C (+) C.
    """
    total = _finite(n.total_trace)
    if sum(weights, Fraction(0)) != total:
        raise EngineError(f"split: weights add up to {sum(weights)} instead of {total}")
    if any(weight <= 0 for weight in weights):
        raise EngineError("split: weights must be positive")

    atoms = []
    copies: list[dict[int, Fraction]] = [{} for _ in weights]
    for summand in n.summands:
        if not summand.is_matrix:
            continue
        size = _finite(summand.size)
        minimal = _finite(summand.minimal_trace)
        for j, weight in enumerate(weights):
            atom_minimal = minimal + size * (weight - total)
            if atom_minimal <= 0:
                continue
            share = size * atom_minimal
            copies[j][len(atoms)] = share
            atoms.append(CornerPiece(Summand.matrix(size, atom_minimal, f"K{len(atoms) + 1}"), {summand.label: share}))

    weight_dim = sum((weight * weight for weight in weights), Fraction(0))
    atom_dim = sum((_finite(atom.summand.minimal_trace) ** 2 for atom in atoms), Fraction(0))
    dim = dim_combine(rdim(n), DimValue.of(total * total - weight_dim + atom_dim), DimOp.ADD)
    hyperfinite = _matrix_dimension(n) == 2 and len(weights) == 2
    remainder = _remainder(n, atoms, dim, hyperfinite, RULE_SPLIT)
    pieces = atoms + ([remainder] if remainder else [])
    if remainder is not None:
        index = len(atoms)
        for j, weight in enumerate(weights):
            rest = weight - sum(copies[j].values(), Fraction(0))
            if rest > 0:
                copies[j][index] = rest
    flag = EMBED_STANDARD if any(s.is_free_factor for s in n.summands) else EMBED_CREATED
    _LOGGER.debug("Split corner %s by %s: %d atoms", n, [str(w) for w in weights], len(atoms))
    return CornerRewrite(tuple(pieces), RULE_SPLIT, flag, tuple(copies))


def diffuse_corner(n: AlgebraDesc) -> CornerRewrite:
    """Free product of the corner with a diffuse hyperfinite algebra of equal trace."""
    total = _finite(n.total_trace)
    feeds = _totals(n)
    if len(n) == 1 and n[0].is_matrix and n[0].size.finite() == 1:
        piece = CornerPiece(Summand.diffuse(total, "F"), feeds)
        return CornerRewrite((piece,), RULE_COMPLETE, EMBED_CREATED)
    dim = dim_combine(rdim(n), DimValue.of(total * total), DimOp.ADD)
    piece = CornerPiece(Summand.free_factor(positive_s(dim, RULE_COMPLETE), total, "F"), feeds)
    flag = EMBED_STANDARD if any(s.is_free_factor for s in n.summands) else EMBED_CREATED
    return CornerRewrite((piece,), RULE_COMPLETE, flag)


def peel_corner(n: AlgebraDesc, s: ExtScalar, base_rdim: DimValue) -> CornerRewrite:
    """Amalgamate the corner with F_s over a base of regulated dimension ``base_rdim``."""
    dim = dim_combine(dim_combine(DimValue.of(s), rdim(n), DimOp.ADD), base_rdim, DimOp.SUB)
    piece = CornerPiece(Summand.free_factor(positive_s(dim, RULE_PEEL), _finite(n.total_trace), "F"), _totals(n))
    return CornerRewrite((piece,), RULE_PEEL, EMBED_SUBSTANDARD)


def _growth_flag(n: AlgebraDesc) -> str:
    return EMBED_SUBSTANDARD if any(s.is_free_factor for s in n.summands) else EMBED_CREATED
