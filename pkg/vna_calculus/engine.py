"""Step engine for amalgamated free products.

The running product is a description together with the locations of the
projections the construction still needs: one minimal projection per live
block of each side's approximant, one per block of the amalgamation base,
and any other cells the caller registers. A location is the trace of the
projection inside each summand. Every step rewrites a corner qMq with a rule
from ``rewrite`` and extends it to the whole algebra: summands that q misses
stay as they are, and each summand q touches is redistributed over the new
pieces in proportion to q's part in it.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .algebra import AlgebraDesc, ProjectionSpec, Summand, compress
from .embedding import AtomicSubalgebra, SimpleStep, StepKind
from .exactnum import DimValue, ExtScalar
from .exceptions import EngineError
from .rewrite import (
    CornerRewrite,
    amplify_corner,
    diffuse_corner,
    glue_or_m2,
    peel_corner,
    split_corner,
)

_LOGGER = logging.getLogger(__name__)

Location = Mapping[str, Fraction]


def block_key(side: str, block_id: str) -> str:
    """Key of a side's block in the location map."""
    return f"{side}:{block_id}"


def base_key(label: str) -> str:
    """Key of a base block's minimal projection in the location map."""
    return f"D:{label}"


@dataclass(frozen=True)
class LineageRecord:
    """One rewrite applied to the running product."""

    rule: str
    embedding: str
    targets: tuple[str, ...]
    sources: tuple[str, ...]

    def to_dict(self) -> dict[str, object]:
        return {
            "rule": self.rule,
            "embedding": self.embedding,
            "targets": list(self.targets),
            "sources": list(self.sources),
        }


@dataclass(frozen=True)
class EngineState:
    """The running product with the locations of live projections."""

    product: AlgebraDesc
    locmap: Mapping[str, Location]
    lineage: tuple[LineageRecord, ...] = ()
    counter: int = 0

    @classmethod
    def build(cls, product: AlgebraDesc, locations: Mapping[str, Mapping[str, Fraction | int]]) -> EngineState:
        """Create a state from a product and the locations of named projections."""
        locmap = {
            key: {label: Fraction(amount) for label, amount in location.items() if amount}
            for key, location in locations.items()
        }
        state = cls(product, locmap, (), len(product))
        errors = state.validate()
        if errors:
            raise EngineError("; ".join(errors))
        return state

    @classmethod
    def from_base(cls, d: AtomicSubalgebra, sides: Iterable[str] = ("A", "B")) -> EngineState:
        """Start from an abelian base: the product is D itself."""
        if not d.is_abelian:
            raise EngineError("the engine starts from an abelian base")
        summands = []
        locmap: dict[str, dict[str, Fraction]] = {}
        for index, block in enumerate(d.blocks, start=1):
            label = f"P{index}"
            trace = block.minimal_trace.finite()
            summands.append(Summand.matrix(1, trace, label))
            locmap[base_key(block.label)] = {label: trace}
            for side in sides:
                locmap[block_key(side, block.label)] = {label: trace}
        return cls(AlgebraDesc(tuple(summands)), locmap, (), len(summands))

    @property
    def total_trace(self) -> ExtScalar:
        return self.product.total_trace

    def location(self, key: str) -> Location:
        if key not in self.locmap:
            raise EngineError(f"dangling location {key!r}")
        return self.locmap[key]

    def trace_of(self, key: str) -> Fraction:
        return sum(self.location(key).values(), Fraction(0))

    def projection(self, location: Location) -> ProjectionSpec:
        """ProjectionSpec aligned with the product's summands."""
        return ProjectionSpec.of(location.get(label, 0) for label in self.product.labels)

    def corner(self, location: Location) -> AlgebraDesc:
        """qMq for the projection at ``location``."""
        return compress(self.product, self.projection(location))

    def validate(self) -> list[str]:
        """Check that every location fits in the product's summands."""
        errors = []
        totals = {summand.label: summand for summand in self.product.summands}
        for key, location in self.locmap.items():
            for label, amount in location.items():
                summand = totals.get(label)
                if summand is None:
                    errors.append(f"{key}: unknown summand {label!r}")
                elif summand.total_trace < ExtScalar.of(amount):
                    errors.append(f"{key}: {amount} exceeds the trace of {label}")
                elif summand.is_matrix and (amount / summand.minimal_trace.finite()).denominator != 1:
                    errors.append(f"{key}: {amount} is not a multiple of the minimal trace of {label}")
        return errors

    def without(self, *keys: str) -> EngineState:
        locmap = {key: location for key, location in self.locmap.items() if key not in keys}
        return replace(self, locmap=locmap)

    def with_location(self, key: str, location: Location) -> EngineState:
        locmap = dict(self.locmap)
        locmap[key] = dict(location)
        return replace(self, locmap=locmap)


def add_locations(*locations: Location) -> dict[str, Fraction]:
    """Location of a sum of orthogonal projections."""
    total: dict[str, Fraction] = {}
    for location in locations:
        for label, amount in location.items():
            total[label] = total.get(label, Fraction(0)) + amount
    return total


def scale_location(location: Location, factor: Fraction) -> dict[str, Fraction]:
    return {label: amount * factor for label, amount in location.items()}


def _extend(summand: Summand, total: Fraction, label: str) -> Summand:
    if summand.is_matrix:
        size = total / summand.minimal_trace.finite()
        if size.denominator != 1:
            raise EngineError(f"extended matrix summand {label} has fractional size {size}")
        return Summand.matrix(size, summand.minimal_trace, label)
    if summand.is_free_factor:
        return Summand.free_factor(summand.s, total, label)
    return Summand.diffuse(total, label)


def apply_corner(
    state: EngineState,
    q: Location,
    rewrite: CornerRewrite,
    copies: Sequence[str] = (),
    consumed: Iterable[str] = (),
) -> EngineState:
    """Extend a corner rewrite of qMq to the whole product.

    ``copies`` names the new projections of a split, in the order of
    ``rewrite.copies``; ``consumed`` keys are dropped from the map.
    A rewrite that does not keep the total trace is an EngineError.
    """
    touched = {label: amount for label, amount in q.items() if amount > 0}
    totals = {summand.label: summand.total_trace.finite() for summand in state.product.summands if summand.label in touched}
    counter = state.counter
    used = set(state.product.labels)
    new_labels = []
    new_summands = []
    for piece in rewrite.pieces:
        counter += 1
        while f"P{counter}" in used:
            counter += 1
        label = f"P{counter}"
        new_labels.append(label)
        total = sum(
            (totals[old] / touched[old] * amount for old, amount in piece.feeds.items()),
            Fraction(0),
        )
        new_summands.append(_extend(piece.summand, total, label))

    kept = [summand for summand in state.product.summands if summand.label not in touched]
    product = state.product.with_summands(kept + new_summands)
    if product.total_trace != state.total_trace:
        raise EngineError(f"{rewrite.rule} moved the total trace from {state.total_trace} to {product.total_trace}")

    dropped = set(consumed)
    locmap: dict[str, dict[str, Fraction]] = {}
    for key, location in state.locmap.items():
        if key in dropped:
            continue
        moved: dict[str, Fraction] = {}
        for old, amount in location.items():
            if old not in touched:
                moved[old] = moved.get(old, Fraction(0)) + amount
                continue
            for label, piece in zip(new_labels, rewrite.pieces, strict=True):
                feed = piece.feeds.get(old)
                if feed:
                    moved[label] = moved.get(label, Fraction(0)) + amount / touched[old] * feed
        locmap[key] = moved
    for key, shares in zip(copies, rewrite.copies, strict=True):
        locmap[key] = {new_labels[index]: amount for index, amount in shares.items()}

    record = LineageRecord(
        rewrite.rule,
        rewrite.embedding,
        tuple(label for label, summand in zip(new_labels, new_summands, strict=True) if not summand.is_matrix),
        tuple(sorted(touched)),
    )
    _LOGGER.debug("%s: %s -> %s", rewrite.rule, record.sources, ", ".join(map(str, new_summands)))
    return EngineState(product, locmap, state.lineage + (record,), counter)


def _sort_location(location: Location) -> tuple[tuple[str, Fraction], ...]:
    return tuple(sorted(location.items()))


def add_partial_isometry(state: EngineState, end1: str, end2: str, result: str | None = None) -> EngineState:
    """Adjoin a partial isometry between two orthogonal projections of equal trace.

    When one endpoint is a whole one-dimensional summand the corner is
    amplified; otherwise the corner gets the half-trace rewrite with the
    lexicographically smaller location playing p. The merged block keeps the
    key ``result`` (default ``end1``).
    """
    loc1 = state.location(end1)
    loc2 = state.location(end2)
    trace = sum(loc1.values(), Fraction(0))
    if trace != sum(loc2.values(), Fraction(0)):
        raise EngineError(f"endpoint traces differ: {trace} and {sum(loc2.values())}")
    if trace == 0:
        raise EngineError("endpoints must be nonzero projections")
    if _sort_location(loc2) < _sort_location(loc1):
        end1, end2, loc1, loc2 = end2, end1, loc2, loc1
    q = add_locations(loc1, loc2)
    corner = state.corner(q)

    minimal = _minimal_label(corner, loc1, loc2) or _minimal_label(corner, loc2, loc1)
    if minimal is not None:
        rewrite = amplify_corner(corner, minimal)
    else:
        rewrite = glue_or_m2(corner, ProjectionSpec.of(loc1.get(label, 0) for label in corner.labels))

    merged = dict(loc1)
    state = apply_corner(state.with_location("~merged", merged), q, rewrite, consumed=(end1, end2))
    location = state.location("~merged")
    return state.without("~merged").with_location(result or end1, location)


def _minimal_label(corner: AlgebraDesc, loc: Location, other: Location) -> str | None:
    if len(loc) != 1:
        return None
    label = next(iter(loc))
    summand = corner.summand(label)
    if summand.is_matrix and summand.size.finite() == 1 and label not in other:
        return label
    return None


def split_block(state: EngineState, key: str, copies: Sequence[tuple[str, Fraction]]) -> EngineState:
    """Cut a located projection into orthogonal copies of the given traces."""
    location = state.location(key)
    weights = [Fraction(weight) for _, weight in copies]
    if len(copies) == 1:
        if weights[0] != sum(location.values(), Fraction(0)):
            raise EngineError(f"single copy of {key} must keep its trace")
        return state.without(key).with_location(copies[0][0], location)
    rewrite = split_corner(state.corner(location), weights)
    return apply_corner(state, location, rewrite, copies=[name for name, _ in copies], consumed=(key,))


def complete_block(state: EngineState, key: str) -> EngineState:
    """Free product of the block's corner with a diffuse algebra of the same trace."""
    location = state.location(key)
    return apply_corner(state, location, diffuse_corner(state.corner(location)))


def peel_cells(state: EngineState, keys: Sequence[str], s: ExtScalar, base_rdim: DimValue) -> EngineState:
    """Replace the corner under the given cells by its amalgam with F_s."""
    q = add_locations(*(state.location(key) for key in keys))
    return apply_corner(state, q, peel_corner(state.corner(q), s, base_rdim))


def apply_simple_step(state: EngineState, step: SimpleStep, side: str) -> EngineState:
    """Apply a split or merge of one side's approximant to the running product."""
    if step.kind is StepKind.SPLIT:
        copies = [(block_key(side, target), weight.finite()) for target, weight in zip(step.targets, step.weights, strict=True)]
        return split_block(state, block_key(side, step.blocks[0]), copies)
    first, second = (block_key(side, block) for block in step.blocks)
    return add_partial_isometry(state, first, second, block_key(side, step.targets[0]))


@dataclass
class LineageSummary:
    """Counts of applied rules and the last rule behind each output summand."""

    counts: dict[str, int] = field(default_factory=dict)
    summands: dict[str, LineageRecord] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Iterable[LineageRecord], labels: Iterable[str]) -> LineageSummary:
        wanted = set(labels)
        summary = cls()
        for record in records:
            summary.counts[record.rule] = summary.counts.get(record.rule, 0) + 1
            for target in record.targets:
                if target in wanted:
                    summary.summands[target] = record
        return summary

    def to_dict(self) -> dict[str, object]:
        return {
            "steps": dict(sorted(self.counts.items())),
            "summands": {label: record.to_dict() for label, record in sorted(self.summands.items())},
        }
