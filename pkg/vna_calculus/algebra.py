"""Formal direct-sum descriptions of algebras.

An algebra is described by an ordered list of summands. Each summand is a
matrix block M_n with the trace of its minimal projections (n may be inf for
B(H)), a diffuse hyperfinite piece with its total trace, or an interpolated
free group factor written F_s^t: L(F_{1+s/t^2}) carrying total trace t.
Summand labels stand for central supports and survive every operation.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, replace
from enum import IntEnum, StrEnum
from typing import Any

from .exactnum import INF, ONE, ZERO, ExtScalar, Number, ext_sum, parse_ext
from .exceptions import ValidationError

_LOGGER = logging.getLogger(__name__)


class SummandKind(StrEnum):
    """Kinds of direct summand."""

    FREE_FACTOR = "free_factor"
    DIFFUSE = "diffuse"
    MATRIX = "matrix"


KIND_RANK = {
    SummandKind.FREE_FACTOR: 0,
    SummandKind.DIFFUSE: 1,
    SummandKind.MATRIX: 2,
}


class AlgebraClass(IntEnum):
    """Nested classes of representable algebras, smallest first."""

    R1 = 1  # multimatrix, finite trace
    R2 = 2  # adds diffuse hyperfinite summands
    R3 = 3  # adds interpolated free group factors
    R4 = 4  # semifinite


@dataclass(frozen=True)
class Summand:
    """One direct summand.

    Matrix summands use ``size`` and ``minimal_trace``. Diffuse and free
    factor summands keep their total trace in ``trace``; free factors add
    ``s``. Construction does not validate; see validate_algebra.
    """

    kind: SummandKind
    label: str = ""
    size: ExtScalar | None = None
    minimal_trace: ExtScalar | None = None
    trace: ExtScalar | None = None
    s: ExtScalar | None = None

    @classmethod
    def matrix(
        cls, size: ExtScalar | Number | str, minimal_trace: ExtScalar | Number | str, label: str = ""
    ) -> Summand:
        """Create a matrix block M_size with the given minimal trace."""
        return cls(
            kind=SummandKind.MATRIX,
            label=label,
            size=ExtScalar.of(size),
            minimal_trace=ExtScalar.of(minimal_trace),
        )

    @classmethod
    def diffuse(cls, trace: ExtScalar | Number | str, label: str = "") -> Summand:
        """Create a diffuse hyperfinite summand of the given total trace."""
        return cls(kind=SummandKind.DIFFUSE, label=label, trace=ExtScalar.of(trace))

    @classmethod
    def free_factor(
        cls, s: ExtScalar | Number | str, t: ExtScalar | Number | str, label: str = ""
    ) -> Summand:
        """Create F_s^t."""
        return cls(
            kind=SummandKind.FREE_FACTOR,
            label=label,
            s=ExtScalar.of(s),
            trace=ExtScalar.of(t),
        )

    @property
    def is_matrix(self) -> bool:
        return self.kind is SummandKind.MATRIX

    @property
    def is_diffuse(self) -> bool:
        return self.kind is SummandKind.DIFFUSE

    @property
    def is_free_factor(self) -> bool:
        return self.kind is SummandKind.FREE_FACTOR

    @property
    def t(self) -> ExtScalar:
        """Total trace of a free factor (the t of F_s^t)."""
        return self.total_trace

    @property
    def total_trace(self) -> ExtScalar:
        """Trace of the central support of this summand."""
        if self.is_matrix:
            return self.size * self.minimal_trace
        return self.trace

    def with_label(self, label: str) -> Summand:
        """Return a copy carrying a different label."""
        return replace(self, label=label)

    def signature(self) -> tuple[Any, ...]:
        """Label-free identity used for canonical comparisons."""
        if self.is_matrix:
            return (self.kind, self.size, self.minimal_trace)
        if self.is_free_factor:
            return (self.kind, self.s, self.trace)
        return (self.kind, self.trace)

    def sort_key(self) -> tuple[Any, ...]:
        """Kind rank, then parameters in descending order, then label."""
        if self.is_matrix:
            params = (_descending(self.size), _descending(self.minimal_trace))
        elif self.is_free_factor:
            params = (_descending(self.trace), _descending(self.s))
        else:
            params = (_descending(self.trace),)
        return (KIND_RANK[self.kind], *params, self.label)

    def __str__(self) -> str:
        if self.is_matrix:
            if self.size == ONE:
                return f"C({self.minimal_trace})"
            return f"M({self.size}; {self.minimal_trace})"
        if self.is_free_factor:
            return f"FG({self.s}; {self.trace})"
        return f"H({self.trace})"

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-friendly record with canonical trace strings."""
        data: dict[str, Any] = {"kind": str(self.kind), "label": self.label}
        if self.is_matrix:
            data["size"] = str(self.size)
            data["minimal_trace"] = str(self.minimal_trace)
        elif self.is_free_factor:
            data["s"] = str(self.s)
            data["t"] = str(self.trace)
        else:
            data["trace"] = str(self.trace)
        data["total_trace"] = str(self.total_trace)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Summand:
        """Create a summand from a to_dict record."""
        kind = SummandKind(data["kind"])
        label = data.get("label", "")
        if kind is SummandKind.MATRIX:
            return cls.matrix(parse_ext(data["size"]), parse_ext(data["minimal_trace"]), label)
        if kind is SummandKind.FREE_FACTOR:
            return cls.free_factor(parse_ext(data["s"]), parse_ext(data["t"]), label)
        return cls.diffuse(parse_ext(data["trace"]), label)


def _descending(value: ExtScalar) -> tuple[int, Any]:
    if value.is_infinite:
        return (0, 0)
    return (1, -value.finite())


@dataclass(frozen=True)
class TruncationNote:
    """Marks a description as the first ``count`` terms of a countable family.

    The two tail flags record whether the positive and negative parts of the
    regulated dimension diverge along the family.
    """

    template: str
    count: int
    positive_tail_diverges: bool = False
    negative_tail_diverges: bool = False


@dataclass(frozen=True)
class AlgebraDesc:
    """A finite ordered direct sum of summands."""

    summands: tuple[Summand, ...]
    truncation: TruncationNote | None = None

    @classmethod
    def of(cls, summands: Iterable[Summand], truncation: TruncationNote | None = None) -> AlgebraDesc:
        """Build a description, labelling unlabelled summands S1, S2, ..."""
        labelled = []
        for index, summand in enumerate(summands, start=1):
            labelled.append(summand if summand.label else summand.with_label(f"S{index}"))
        return cls(tuple(labelled), truncation)

    def __iter__(self) -> Iterator[Summand]:
        return iter(self.summands)

    def __len__(self) -> int:
        return len(self.summands)

    def __getitem__(self, index: int) -> Summand:
        return self.summands[index]

    def __str__(self) -> str:
        return " (+) ".join(str(summand) for summand in self.summands)

    @property
    def labels(self) -> list[str]:
        return [summand.label for summand in self.summands]

    @property
    def total_trace(self) -> ExtScalar:
        return ext_sum(summand.total_trace for summand in self.summands)

    def index_of(self, label: str) -> int:
        """Return the position of the summand with this label."""
        for index, summand in enumerate(self.summands):
            if summand.label == label:
                return index
        raise KeyError(label)

    def summand(self, label: str) -> Summand:
        return self.summands[self.index_of(label)]

    def signature(self) -> tuple[tuple[Any, ...], ...]:
        """Label-free canonical identity."""
        return tuple(summand.signature() for summand in canonicalize(self).summands)

    def with_summands(self, summands: Iterable[Summand]) -> AlgebraDesc:
        return AlgebraDesc(tuple(summands), self.truncation)

    def to_dict(self) -> list[dict[str, Any]]:
        return [summand.to_dict() for summand in self.summands]


@dataclass(frozen=True)
class ProjectionSpec:
    """A projection given by its trace inside each summand."""

    allocation: tuple[ExtScalar, ...]

    @classmethod
    def of(cls, values: Iterable[ExtScalar | Number | str]) -> ProjectionSpec:
        return cls(tuple(ExtScalar.of(value) for value in values))

    @classmethod
    def identity(cls, a: AlgebraDesc) -> ProjectionSpec:
        """The unit of ``a``."""
        return cls(tuple(summand.total_trace for summand in a.summands))

    @property
    def total(self) -> ExtScalar:
        return ext_sum(self.allocation)

    @property
    def full_central_support(self) -> bool:
        return all(not value.is_zero for value in self.allocation)


def validate_summand(summand: Summand) -> list[str]:
    """Return the invariant violations of one summand."""
    name = summand.label or "summand"
    if summand.is_matrix:
        errors = []
        size = summand.size
        if size is None or size.is_zero:
            errors.append(f"{name}: size must be positive or inf")
        elif not size.is_infinite and size.finite().denominator != 1:
            errors.append(f"{name}: size must be an integer")
        if summand.minimal_trace is None or summand.minimal_trace.is_infinite:
            errors.append(f"{name}: minimal trace must be finite")
        elif summand.minimal_trace.is_zero:
            errors.append(f"{name}: minimal trace must be positive")
        return errors
    if summand.is_free_factor:
        errors = []
        if summand.s is None or summand.s.is_zero:
            errors.append(f"{name}: free factor s must be positive")
        if summand.trace is None or summand.trace.is_zero:
            errors.append(f"{name}: free factor t must be positive")
        return errors
    if summand.trace is None or summand.trace.is_zero:
        return [f"{name}: diffuse trace must be positive"]
    return []


def validate_algebra(a: AlgebraDesc) -> list[str]:
    """Check every description invariant; an empty list means valid."""
    if not a.summands:
        return ["algebra must have at least one summand"]
    errors: list[str] = []
    seen: set[str] = set()
    for summand in a.summands:
        if not summand.label:
            errors.append("summand labels must be non-empty")
        elif summand.label in seen:
            errors.append(f"duplicate summand label {summand.label!r}")
        seen.add(summand.label)
        errors.extend(validate_summand(summand))
    return errors


def ensure_valid_algebra(a: AlgebraDesc) -> None:
    """Raise ValidationError unless ``a`` is valid."""
    errors = validate_algebra(a)
    if errors:
        raise ValidationError(errors)


def validate_projection(a: AlgebraDesc, p: ProjectionSpec) -> list[str]:
    """Check that ``p`` describes a nonzero projection of ``a``."""
    if len(p.allocation) != len(a.summands):
        return [f"projection has {len(p.allocation)} entries, algebra has {len(a.summands)} summands"]
    errors = []
    for summand, amount in zip(a.summands, p.allocation, strict=True):
        if summand.total_trace < amount:
            errors.append(f"{summand.label}: allocation {amount} exceeds summand trace {summand.total_trace}")
        elif summand.is_matrix and not amount.is_infinite:
            multiple = amount.finite() / summand.minimal_trace.finite()
            if multiple.denominator != 1:
                errors.append(
                    f"{summand.label}: allocation {amount} is not a multiple of minimal trace "
                    f"{summand.minimal_trace}"
                )
    if all(amount.is_zero for amount in p.allocation):
        errors.append("projection must be nonzero")
    return errors


def canonicalize(a: AlgebraDesc) -> AlgebraDesc:
    """Sort summands into the fixed kind order; nothing is merged."""
    return a.with_summands(sorted(a.summands, key=Summand.sort_key))


def rescale_trace(a: AlgebraDesc, c: Number) -> AlgebraDesc:
    """Multiply every trace by ``c``; F_s^t becomes F_{c^2 s}^{ct}."""
    factor = ExtScalar.of(c)
    if factor.is_zero or factor.is_infinite:
        raise ValueError("rescale factor must be a finite positive rational")
    return a.with_summands(rescale_summand(summand, factor) for summand in a.summands)


def rescale_summand(summand: Summand, factor: ExtScalar) -> Summand:
    """Rescale one summand's traces by ``factor``."""
    if summand.is_matrix:
        return replace(summand, minimal_trace=summand.minimal_trace * factor)
    if summand.is_free_factor:
        return replace(summand, s=summand.s * factor * factor, trace=summand.trace * factor)
    return replace(summand, trace=summand.trace * factor)


def compress_summand(summand: Summand, amount: ExtScalar) -> Summand:
    """Cut a summand down to a subprojection of trace ``amount``."""
    if summand.is_matrix:
        if amount.is_infinite:
            return replace(summand, size=INF)
        return replace(summand, size=ExtScalar.of(amount.finite() / summand.minimal_trace.finite()))
    return replace(summand, trace=amount)


def compress(a: AlgebraDesc, p: ProjectionSpec) -> AlgebraDesc:
    """Return pAp; summands that p misses are dropped."""
    errors = validate_projection(a, p)
    if errors:
        raise ValidationError(errors)
    kept = [
        compress_summand(summand, amount)
        for summand, amount in zip(a.summands, p.allocation, strict=True)
        if not amount.is_zero
    ]
    _LOGGER.debug("Compressed %d summands to %d (trace %s)", len(a), len(kept), p.total)
    return AlgebraDesc(tuple(kept), a.truncation if p.full_central_support else None)


def direct_sum(a: AlgebraDesc, b: AlgebraDesc) -> AlgebraDesc:
    """Return a (+) b; labels must not collide."""
    collisions = set(a.labels) & set(b.labels)
    if collisions:
        raise ValidationError([f"duplicate summand label {label!r}" for label in sorted(collisions)])
    return AlgebraDesc(a.summands + b.summands)


def classify(a: AlgebraDesc) -> AlgebraClass:
    """Return the smallest class containing ``a``."""
    if a.total_trace.is_infinite:
        return AlgebraClass.R4
    kinds = {summand.kind for summand in a.summands}
    if SummandKind.FREE_FACTOR in kinds:
        return AlgebraClass.R3
    if SummandKind.DIFFUSE in kinds:
        return AlgebraClass.R2
    return AlgebraClass.R1


def atomic_part(a: AlgebraDesc) -> list[Summand]:
    """Matrix summands of ``a``, in order."""
    return [summand for summand in a.summands if summand.is_matrix]


def diffuse_part(a: AlgebraDesc) -> list[Summand]:
    """Diffuse and free factor summands of ``a``, in order."""
    return [summand for summand in a.summands if not summand.is_matrix]


def free_group_parameter(summand: Summand) -> ExtScalar | None:
    """Return r with F_s^t = L(F_r), or None when t is infinite."""
    if not summand.is_free_factor:
        raise ValueError(f"{summand.label} is not a free factor")
    if summand.trace.is_infinite:
        return None
    if summand.s.is_infinite:
        return INF
    t = summand.trace.finite()
    return ExtScalar.of(1 + summand.s.finite() / (t * t))


def is_multimatrix(a: AlgebraDesc) -> bool:
    """True when every summand is a finite matrix block."""
    return all(summand.is_matrix and not summand.size.is_infinite for summand in a.summands)


def nonzero_allocation(a: AlgebraDesc, p: ProjectionSpec) -> dict[str, ExtScalar]:
    """Map summand labels to the nonzero entries of ``p``."""
    return {
        summand.label: amount
        for summand, amount in zip(a.summands, p.allocation, strict=True)
        if amount != ZERO
    }
