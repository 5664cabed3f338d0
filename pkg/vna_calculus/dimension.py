"""Free dimension and regulated dimension."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable

from .algebra import AlgebraDesc, Summand
from .const import TAIL_SAMPLE_HIGH, TAIL_SAMPLE_LOW
from .exactnum import (
    NEG_INF,
    ONE,
    POS_INF,
    UNDEFINED,
    DimOp,
    DimValue,
    dim_combine,
    dim_sum,
)
from .exceptions import ValidationError

_LOGGER = logging.getLogger(__name__)


def summand_rdim(summand: Summand) -> DimValue:
    """Regulated dimension of a single summand.

    F_s^t contributes s, a matrix block contributes minus its minimal trace
    squared and diffuse hyperfinite pieces contribute nothing.
    """
    if summand.is_free_factor:
        return DimValue.of(summand.s)
    if summand.is_matrix:
        t = summand.minimal_trace.finite()
        return DimValue.of(-t * t)
    return DimValue.of(0)


def rdim(a: AlgebraDesc) -> DimValue:
    """Regulated dimension; additive over summands, undefined on inf - inf."""
    return dim_sum(summand_rdim(summand) for summand in a.summands)


def fdim(a: AlgebraDesc) -> DimValue:
    """Free dimension of a description normalized to total trace 1."""
    if a.total_trace != ONE:
        raise ValidationError(["fdim requires a normalized tracial state"])
    return dim_combine(DimValue.of(1), rdim(a), DimOp.ADD)


def tail_contributions(summands: Iterable[Summand]) -> tuple[DimValue, DimValue]:
    """Split the regulated dimension of some summands into (positive, negative) parts."""
    positive = []
    negative = []
    for summand in summands:
        value = summand_rdim(summand)
        if summand.is_free_factor:
            positive.append(value)
        elif summand.is_matrix:
            negative.append(-value)
    return dim_sum(positive), dim_sum(negative)


def _diverges(low: DimValue, high: DimValue) -> bool:
    # Terms decaying no faster than 1/i make the series diverge.
    if not low.is_finite or not high.is_finite:
        return True
    if low.value == 0:
        return high.value != 0
    return high.value * 2 >= low.value


def tail_flags(terms_at: Callable[[int], Iterable[Summand]]) -> tuple[bool, bool]:
    """Decide whether the positive and negative rdim series of a family diverge.

    ``terms_at(i)`` returns the summands contributed by the i-th term. The
    decision compares the contributions at two sample indices.
    """
    pos_low, neg_low = tail_contributions(terms_at(TAIL_SAMPLE_LOW))
    pos_high, neg_high = tail_contributions(terms_at(TAIL_SAMPLE_HIGH))
    flags = (_diverges(pos_low, pos_high), _diverges(neg_low, neg_high))
    _LOGGER.debug("Tail flags %s (positive %s -> %s, negative %s -> %s)", flags, pos_low, pos_high, neg_low, neg_high)
    return flags


def limit_rdim(a: AlgebraDesc) -> DimValue | None:
    """Regulated dimension of the declared family in the limit.

    Returns inf, -inf or undef when a tail diverges, and None when the
    description is not truncated or its limit is some finite value.
    """
    note = a.truncation
    if note is None:
        return None
    if note.positive_tail_diverges and note.negative_tail_diverges:
        return UNDEFINED
    if note.positive_tail_diverges:
        return POS_INF
    if note.negative_tail_diverges:
        return NEG_INF
    return None


def limit_note(value: DimValue | None) -> str:
    """Text for a limit classification."""
    if value is None:
        return "finite in limit"
    return f"{value} in limit"


def combine_limits(a: DimValue | None, b: DimValue | None, d: DimValue | None) -> DimValue | None:
    """Limit of rdim(A) + rdim(B) - rdim(D); None when all parts stay finite."""
    if a is None and b is None and d is None:
        return None
    zero = DimValue.of(0)
    total = dim_combine(a or zero, b or zero, DimOp.ADD)
    total = dim_combine(total, d or zero, DimOp.SUB)
    return total if not total.is_finite else None
