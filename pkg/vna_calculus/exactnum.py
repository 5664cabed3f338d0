"""Exact extended arithmetic for traces and dimension values.

Traces are nonnegative rationals or +inf (ExtScalar). Dimensions are signed
rationals, +inf, -inf or an explicit undefined value (DimValue) so that the
``inf - inf`` failure of regulated dimension is carried as data instead of
raising.
"""

from __future__ import annotations

import re
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import total_ordering

INF_TEXT = "inf"
NEG_INF_TEXT = "-inf"
UNDEF_TEXT = "undef"

_RATIONAL_PATTERN = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")

Number = int | Fraction


def parse_rational(text: str) -> Fraction:
    """Parse ``p`` or ``p/q`` into a Fraction in lowest terms."""
    match = _RATIONAL_PATTERN.match(text)
    if match is None:
        raise ValueError(f"malformed rational {text!r}")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) is not None else 1
    if denominator == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(numerator, denominator)


@total_ordering
@dataclass(frozen=True)
class ExtScalar:
    """A nonnegative rational or positive infinity.

    ``value`` is None for infinity. Fractions normalize themselves, so the
    stored value is always in lowest terms with a positive denominator.
    """

    value: Fraction | None

    def __post_init__(self) -> None:
        if self.value is not None:
            if not isinstance(self.value, Fraction):
                object.__setattr__(self, "value", Fraction(self.value))
            if self.value < 0:
                raise ValueError(f"trace values are nonnegative, got {self.value}")

    @classmethod
    def of(cls, value: ExtScalar | Number | str) -> ExtScalar:
        """Coerce an int, Fraction, canonical string or ExtScalar."""
        if isinstance(value, ExtScalar):
            return value
        if isinstance(value, str):
            return parse_ext(value)
        return cls(Fraction(value))

    @property
    def is_infinite(self) -> bool:
        """Return True for positive infinity."""
        return self.value is None

    @property
    def is_zero(self) -> bool:
        """Return True for exactly zero."""
        return self.value == 0

    def finite(self) -> Fraction:
        """Return the finite value, raising ValueError on infinity."""
        if self.value is None:
            raise ValueError("expected a finite trace, got inf")
        return self.value

    def __add__(self, other: ExtScalar | Number) -> ExtScalar:
        return ext_add(self, ExtScalar.of(other))

    __radd__ = __add__

    def __sub__(self, other: ExtScalar | Number) -> ExtScalar:
        other = ExtScalar.of(other)
        if other.value is None:
            raise ValueError("cannot subtract an infinite trace")
        if self.value is None:
            return self
        return ExtScalar(self.value - other.value)

    def __mul__(self, other: ExtScalar | Number) -> ExtScalar:
        other = ExtScalar.of(other)
        # measure convention: 0 * inf = 0
        if self.is_zero or other.is_zero:
            return ZERO
        if self.value is None or other.value is None:
            return INF
        return ExtScalar(self.value * other.value)

    __rmul__ = __mul__

    def __truediv__(self, other: ExtScalar | Number) -> ExtScalar:
        other = ExtScalar.of(other)
        if other.value is None or other.value == 0:
            raise ValueError("division by zero or infinite trace")
        if self.value is None:
            return self
        return ExtScalar(self.value / other.value)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, ExtScalar):
            return NotImplemented
        if self.value is None:
            return False
        if other.value is None:
            return True
        return self.value < other.value

    def __str__(self) -> str:
        return INF_TEXT if self.value is None else str(self.value)

    def __repr__(self) -> str:
        return f"ExtScalar({self})"


ZERO = ExtScalar(Fraction(0))
ONE = ExtScalar(Fraction(1))
INF = ExtScalar(None)


def parse_ext(text: str) -> ExtScalar:
    """Parse ``inf``, ``p`` or ``p/q`` into an ExtScalar."""
    if text.strip() == INF_TEXT:
        return INF
    return ExtScalar(parse_rational(text))


def ext_add(a: ExtScalar, b: ExtScalar) -> ExtScalar:
    """Exact sum; infinity absorbs."""
    if a.value is None or b.value is None:
        return INF
    return ExtScalar(a.value + b.value)


def ext_sum(values: Iterable[ExtScalar]) -> ExtScalar:
    """Sum an iterable of ExtScalar values, starting from zero."""
    total = ZERO
    for value in values:
        total = ext_add(total, value)
    return total


class DimKind(Enum):
    """The four states of a dimension value."""

    FINITE = "finite"
    POS_INF = "pos_inf"
    NEG_INF = "neg_inf"
    UNDEFINED = "undefined"


class DimOp(Enum):
    """Binary operations understood by dim_combine."""

    ADD = "add"
    SUB = "sub"
    SCALE_SQ = "scale_sq"


@dataclass(frozen=True)
class DimValue:
    """A signed extended rational with an absorbing undefined state."""

    kind: DimKind
    value: Fraction = Fraction(0)

    @classmethod
    def of(cls, value: Number | ExtScalar | DimValue) -> DimValue:
        """Coerce a rational, a trace or a DimValue."""
        if isinstance(value, DimValue):
            return value
        if isinstance(value, ExtScalar):
            return POS_INF if value.is_infinite else cls(DimKind.FINITE, value.finite())
        return cls(DimKind.FINITE, Fraction(value))

    @property
    def is_finite(self) -> bool:
        return self.kind is DimKind.FINITE

    @property
    def is_undefined(self) -> bool:
        return self.kind is DimKind.UNDEFINED

    def __add__(self, other: DimValue | Number) -> DimValue:
        return dim_combine(self, DimValue.of(other), DimOp.ADD)

    def __sub__(self, other: DimValue | Number) -> DimValue:
        return dim_combine(self, DimValue.of(other), DimOp.SUB)

    def __neg__(self) -> DimValue:
        return _negate(self)

    def _rank(self) -> tuple[int, Fraction]:
        if self.kind is DimKind.UNDEFINED:
            raise TypeError("undefined dimension values are not ordered")
        if self.kind is DimKind.NEG_INF:
            return (0, Fraction(0))
        if self.kind is DimKind.POS_INF:
            return (2, Fraction(0))
        return (1, self.value)

    def __lt__(self, other: DimValue) -> bool:
        return self._rank() < other._rank()

    def __le__(self, other: DimValue) -> bool:
        return self._rank() <= other._rank()

    def __str__(self) -> str:
        if self.kind is DimKind.POS_INF:
            return INF_TEXT
        if self.kind is DimKind.NEG_INF:
            return NEG_INF_TEXT
        if self.kind is DimKind.UNDEFINED:
            return UNDEF_TEXT
        return str(self.value)

    def __repr__(self) -> str:
        return f"DimValue({self})"


POS_INF = DimValue(DimKind.POS_INF)
NEG_INF = DimValue(DimKind.NEG_INF)
UNDEFINED = DimValue(DimKind.UNDEFINED)


def parse_dim(text: str) -> DimValue:
    """Parse the canonical rendering of a DimValue."""
    stripped = text.strip()
    if stripped == INF_TEXT:
        return POS_INF
    if stripped == NEG_INF_TEXT:
        return NEG_INF
    if stripped == UNDEF_TEXT:
        return UNDEFINED
    return DimValue(DimKind.FINITE, parse_rational(stripped))


def _negate(a: DimValue) -> DimValue:
    if a.kind is DimKind.POS_INF:
        return NEG_INF
    if a.kind is DimKind.NEG_INF:
        return POS_INF
    if a.kind is DimKind.UNDEFINED:
        return a
    return DimValue(DimKind.FINITE, -a.value)


def _add(a: DimValue, b: DimValue) -> DimValue:
    if a.is_undefined or b.is_undefined:
        return UNDEFINED
    infinite = {a.kind, b.kind} - {DimKind.FINITE}
    if infinite == {DimKind.POS_INF, DimKind.NEG_INF}:
        return UNDEFINED
    if DimKind.POS_INF in infinite:
        return POS_INF
    if DimKind.NEG_INF in infinite:
        return NEG_INF
    return DimValue(DimKind.FINITE, a.value + b.value)


def _scale_sq(a: DimValue, c: DimValue) -> DimValue:
    if a.is_undefined or c.is_undefined:
        return UNDEFINED
    if not c.is_finite:
        raise ValueError("scale factor must be a finite rational")
    factor = c.value * c.value
    if a.is_finite:
        return DimValue(DimKind.FINITE, a.value * factor)
    return a if factor != 0 else UNDEFINED


def dim_combine(a: DimValue, b: DimValue, op: DimOp) -> DimValue:
    """Combine two dimension values; total, with undefined absorbing.

    ``SCALE_SQ`` multiplies ``a`` by the square of the finite rational ``b``.
    """
    if op is DimOp.ADD:
        return _add(a, b)
    if op is DimOp.SUB:
        return _add(a, _negate(b))
    return _scale_sq(a, b)


def dim_sum(values: Iterable[DimValue]) -> DimValue:
    """Left-to-right dim_combine sum starting from zero."""
    total = DimValue.of(0)
    for value in values:
        total = dim_combine(total, value, DimOp.ADD)
    return total
