"""Amalgamated free products A *_D B over an atomic type I base.

The general computation abelianizes D, freezes free factor summands of A and
B to their D-corners, builds both sides from D by simple steps on dyadic
matrix approximants, completes each approximated diffuse summand exactly,
peels the frozen free factors back in one at a time, and finally amplifies
the result from eMe back to the whole algebra. Closed forms short-circuit
the inputs where one side is a single free factor or both are single
diffuse summands.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .algebra import (
    AlgebraDesc,
    ProjectionSpec,
    Summand,
    canonicalize,
    compress,
    ensure_valid_algebra,
)
from .const import (
    CHECK_MATCH,
    CHECK_MISMATCH,
    CHECK_NOT_APPLICABLE,
    DEFAULT_DEPTH,
    EMBED_SUBSTANDARD,
    RULE_CLOSED_FORM,
    SHAPE_DIFFUSE_DIFFUSE,
    SHAPE_FREE_FREE,
    SHAPE_FREE_GENERAL,
    SHAPE_FREE_HYPERFINITE,
    STATUS_BOUNDS_ONLY,
    STATUS_EXACT,
    STATUS_STABLE,
)
from .dimension import combine_limits, limit_note, limit_rdim, rdim
from .embedding import (
    AtomicSubalgebra,
    DBlock,
    EmbeddingSpec,
    abelianize,
    decompose_simple_steps,
    ensure_valid_embedding,
    final_block_ids,
    multimatrix_chain,
    underline,
)
from .engine import (
    EngineState,
    LineageRecord,
    LineageSummary,
    apply_simple_step,
    base_key,
    block_key,
    complete_block,
    peel_cells,
    scale_location,
)
from .exactnum import INF, ZERO, DimOp, DimValue, ExtScalar, dim_combine, ext_sum
from .exceptions import EngineError, ShapeMismatch, ValidationError
from .rewrite import positive_s

_LOGGER = logging.getLogger(__name__)

SIDES = ("A", "B")


@dataclass(frozen=True)
class DepthBound:
    """Uncompleted approximant product at one chain depth."""

    depth: int
    rdim: DimValue
    free_factors: tuple[tuple[ExtScalar, ExtScalar], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "rdim": str(self.rdim),
            "free_factors": [{"s": str(s), "t": str(t)} for s, t in self.free_factors],
        }


@dataclass(frozen=True)
class ConvergenceReport:
    """How the result was reached and what it says about declared families."""

    status: str
    depth: int | None = None
    bounds: tuple[DepthBound, ...] = ()
    truncated: bool = False
    limit_rdim: DimValue | None = None

    @property
    def note(self) -> str:
        parts = [self.status if self.depth is None else f"{self.status} at depth {self.depth}"]
        if self.truncated:
            parts.append(f"declared family: {limit_note(self.limit_rdim)}")
        return "; ".join(parts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "depth": self.depth,
            "bounds": [bound.to_dict() for bound in self.bounds],
            "truncated": self.truncated,
            "limit_rdim": None if self.limit_rdim is None else str(self.limit_rdim),
            "note": self.note,
        }


@dataclass(frozen=True)
class ProvenanceRecord:
    """Where the central support of an input summand sits in the output."""

    side: str
    label: str
    location: tuple[tuple[str, ExtScalar], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "side": self.side,
            "label": self.label,
            "location": {label: str(amount) for label, amount in self.location},
        }


@dataclass(frozen=True)
class ProductResult:
    """Output of a product computation."""

    algebra: AlgebraDesc
    rdim_structural: DimValue
    rdim_formula: DimValue
    additivity_check: str
    convergence: ConvergenceReport
    lineage: LineageSummary = field(default_factory=LineageSummary)
    provenance: tuple[ProvenanceRecord, ...] = ()
    base_embedding: EmbeddingSpec | None = None
    shape: str | None = None

    def location_of(self, side: str, label: str) -> ProjectionSpec:
        """ProjectionSpec of an input summand's central support in the output."""
        for record in self.provenance:
            if record.side == side and record.label == label:
                location = dict(record.location)
                return ProjectionSpec(tuple(location.get(out, ZERO) for out in self.algebra.labels))
        raise KeyError((side, label))

    def to_dict(self) -> dict[str, Any]:
        return {
            "algebra": self.algebra.to_dict(),
            "rdim_structural": str(self.rdim_structural),
            "rdim_formula": str(self.rdim_formula),
            "additivity_check": self.additivity_check,
            "lineage": self.lineage.to_dict(),
            "convergence": self.convergence.to_dict(),
            "provenance": [record.to_dict() for record in self.provenance],
            "shape": self.shape,
        }


def rdim_formula(a: AlgebraDesc, b: AlgebraDesc, d: AtomicSubalgebra) -> DimValue:
    """rdim(A) + rdim(B) - rdim(D)."""
    total = dim_combine(rdim(a), rdim(b), DimOp.ADD)
    return dim_combine(total, rdim(d.as_algebra()), DimOp.SUB)


def additivity_check(structural: DimValue, formula: DimValue) -> str:
    """Compare the output's rdim with the formula; a mismatch is an engine failure."""
    if formula.is_undefined:
        return CHECK_NOT_APPLICABLE
    if structural != formula:
        raise EngineError(f"rdim additivity failed: structural {structural}, formula {formula}")
    return CHECK_MATCH


def _limits(a: AlgebraDesc, b: AlgebraDesc, d: AtomicSubalgebra) -> tuple[bool, DimValue | None]:
    truncated = any(x.truncation is not None for x in (a, b, d))
    return truncated, combine_limits(limit_rdim(a), limit_rdim(b), limit_rdim(d.as_algebra()))


def validate_inputs(
    a: AlgebraDesc, b: AlgebraDesc, d: AtomicSubalgebra, e_a: EmbeddingSpec, e_b: EmbeddingSpec
) -> None:
    """Raise ValidationError unless both embeddings are valid."""
    ensure_valid_algebra(a)
    ensure_valid_algebra(b)
    problems = []
    for name, algebra, embedding in (("A", a, e_a), ("B", b, e_b)):
        try:
            ensure_valid_embedding(d, algebra, embedding)
        except ValidationError as err:
            problems.extend(f"{name}: {problem}" for problem in err.problems)
    if problems:
        raise ValidationError(problems)


# =============================================================================
# Closed forms
# =============================================================================


def closed_form_shape(a: AlgebraDesc, b: AlgebraDesc) -> tuple[str, AlgebraDesc | None, AlgebraDesc | None]:
    """Return (shape, free side, other side) or raise ShapeMismatch."""
    single_a = len(a) == 1
    single_b = len(b) == 1
    if single_a and single_b and a[0].is_diffuse and b[0].is_diffuse:
        return SHAPE_DIFFUSE_DIFFUSE, None, None
    for free, other in ((a, b), (b, a)):
        if len(free) != 1 or not free[0].is_free_factor:
            continue
        if len(other) == 1 and other[0].is_free_factor:
            return SHAPE_FREE_FREE, free, other
        if all(not summand.is_free_factor for summand in other.summands):
            return SHAPE_FREE_HYPERFINITE, free, other
        return SHAPE_FREE_GENERAL, free, other
    raise ShapeMismatch("no closed form for these inputs")


def closed_form_product(
    a: AlgebraDesc, b: AlgebraDesc, d: AtomicSubalgebra, e_a: EmbeddingSpec, e_b: EmbeddingSpec
) -> ProductResult:
    """Single free factor products that have an explicit formula.

    Two diffuse summands give F_{-rdim D}; a free factor F_s against any
    other side gives F_{s + rdim(other) - rdim D}. The total trace is the
    common total trace of the inputs.
    """
    validate_inputs(a, b, d, e_a, e_b)
    shape, free, other = closed_form_shape(a, b)
    base = rdim(d.as_algebra())
    if shape == SHAPE_DIFFUSE_DIFFUSE:
        dim = dim_combine(DimValue.of(0), base, DimOp.SUB)
    else:
        dim = dim_combine(dim_combine(DimValue.of(free[0].s), rdim(other), DimOp.ADD), base, DimOp.SUB)
    total = a.total_trace
    summand = Summand.free_factor(positive_s(dim, RULE_CLOSED_FORM), total, "P1")
    algebra = AlgebraDesc((summand,))
    formula = rdim_formula(a, b, d)
    structural = rdim(algebra)
    record = LineageRecord(RULE_CLOSED_FORM, EMBED_SUBSTANDARD, ("P1",), tuple(a.labels + b.labels))
    truncated, limit = _limits(a, b, d)
    provenance = tuple(
        ProvenanceRecord(side, s.label, (("P1", s.total_trace),))
        for side, algebra_ in (("A", a), ("B", b))
        for s in algebra_.summands
    )
    _LOGGER.debug("Closed form %s gives %s", shape, summand)
    return ProductResult(
        algebra=algebra,
        rdim_structural=structural,
        rdim_formula=formula,
        additivity_check=additivity_check(structural, formula),
        convergence=ConvergenceReport(STATUS_EXACT, truncated=truncated, limit_rdim=limit),
        lineage=LineageSummary({RULE_CLOSED_FORM: 1}, {"P1": record}),
        provenance=provenance,
        base_embedding=EmbeddingSpec(tuple((block.minimal_trace,) for block in d.blocks)),
        shape=shape,
    )


# =============================================================================
# General products
# =============================================================================


@dataclass
class _Side:
    """One input after abelianizing and freezing its free factor summands."""

    name: str
    original: AlgebraDesc
    frozen: AlgebraDesc
    embedding: EmbeddingSpec
    cells: dict[str, list[tuple[int, str]]]

    @property
    def diffuse_labels(self) -> list[str]:
        return [summand.label for summand in self.frozen.summands if summand.is_diffuse]


@dataclass
class EngineOutcome:
    """Final engine state plus what is needed to read input summands off it."""

    result: ProductResult
    state: EngineState
    cell_locations: dict[tuple[str, str], dict[int, dict[str, Fraction]]]


def _prepare(name: str, d: AtomicSubalgebra, a: AlgebraDesc, e: EmbeddingSpec) -> _Side:
    frozen_labels = [summand.label for summand in a.summands if summand.is_free_factor]
    frozen, embedding, cells = underline(a, d, e, frozen_labels)
    return _Side(name, a, frozen, embedding, cells)


def _run_core(
    d: AtomicSubalgebra, sides: Sequence[_Side], depth: int
) -> tuple[EngineState, dict[str, AlgebraDesc], dict[str, dict[str, str]], DepthBound]:
    state = EngineState.from_base(d, [side.name for side in sides])
    base = d.as_algebra()
    chains: dict[str, AlgebraDesc] = {}
    finals: dict[str, dict[str, str]] = {}
    for side in sides:
        chain, _ = multimatrix_chain(side.frozen, d, side.embedding, depth)
        chains[side.name] = chain
        finals[side.name] = final_block_ids(base, chain, side.embedding)
        steps = decompose_simple_steps(base, chain, side.embedding)
        _LOGGER.debug("Side %s at depth %d: %d simple steps", side.name, depth, len(steps))
        for step in steps:
            state = apply_simple_step(state, step, side.name)
    bound = DepthBound(
        depth,
        rdim(state.product),
        tuple(sorted((s.s, s.trace) for s in state.product.summands if s.is_free_factor)),
    )
    for side in sides:
        for label in side.diffuse_labels:
            state = complete_block(state, block_key(side.name, finals[side.name][label]))
    return state, chains, finals, bound


def _cell_locations(
    state: EngineState, side: _Side, chain: AlgebraDesc, finals: Mapping[str, str]
) -> dict[str, dict[int, dict[str, Fraction]]]:
    """Location of e_k p_i for every summand i of the abelianized side."""
    frozen_cells = {cell_label for pieces in side.cells.values() for _, cell_label in pieces}
    cells: dict[str, dict[int, dict[str, Fraction]]] = {}
    for i, summand in enumerate(chain.summands):
        if summand.label in frozen_cells:
            continue
        block = state.location(block_key(side.name, finals[summand.label]))
        minimal = summand.minimal_trace.finite()
        cells[summand.label] = {
            k: scale_location(block, side.embedding.entry(k, i).finite() / minimal)
            for k in range(len(side.embedding.rows))
            if not side.embedding.entry(k, i).is_zero
        }
    for label, pieces in side.cells.items():
        cells[label] = {
            k: dict(state.location(block_key(side.name, finals[cell_label]))) for k, cell_label in pieces
        }
    return cells


def _amplify(
    state: EngineState, d: AtomicSubalgebra, original: AtomicSubalgebra
) -> tuple[AlgebraDesc, EmbeddingSpec]:
    """Pass from eMe back to M using the sizes of the original base blocks."""
    locations = [state.location(base_key(block.label)) for block in d.blocks]
    summands = []
    for summand in state.product.summands:
        total = ext_sum(
            block.size * ExtScalar.of(location.get(summand.label, 0))
            for block, location in zip(original.blocks, locations, strict=True)
        )
        if summand.is_matrix:
            size = INF if total.is_infinite else total / summand.minimal_trace
            summands.append(Summand.matrix(size, summand.minimal_trace, summand.label))
        elif summand.is_free_factor:
            summands.append(Summand.free_factor(summand.s, total, summand.label))
        else:
            summands.append(Summand.diffuse(total, summand.label))
    algebra = canonicalize(AlgebraDesc(tuple(summands)))
    rows = tuple(
        tuple(ExtScalar.of(location.get(label, 0)) for label in algebra.labels) for location in locations
    )
    return algebra, EmbeddingSpec(rows)


def _full_location(
    cells: Mapping[int, Mapping[str, Fraction]], original: AtomicSubalgebra, labels: Sequence[str]
) -> tuple[tuple[str, ExtScalar], ...]:
    full: dict[str, ExtScalar] = {}
    for k, location in cells.items():
        for label, amount in location.items():
            full[label] = full.get(label, ZERO) + original.blocks[k].size * ExtScalar.of(amount)
    return tuple((label, full[label]) for label in labels if label in full)


def _peel(state: EngineState, side: _Side, finals: Mapping[str, str]) -> EngineState:
    for label, pieces in side.cells.items():
        summand = side.original.summand(label)
        keys = [block_key(side.name, finals[cell_label]) for _, cell_label in pieces]
        base = -sum(
            (side.embedding.entry(k, side.frozen.index_of(cell_label)).finite() ** 2 for k, cell_label in pieces),
            Fraction(0),
        )
        state = peel_cells(state, keys, summand.s, DimValue.of(base))
    return state


def run_product(
    a: AlgebraDesc,
    b: AlgebraDesc,
    d: AtomicSubalgebra,
    e_a: EmbeddingSpec,
    e_b: EmbeddingSpec,
    depth: int = DEFAULT_DEPTH,
    side_order: Sequence[str] = SIDES,
) -> EngineOutcome:
    """Run the general engine and keep its final state."""
    validate_inputs(a, b, d, e_a, e_b)
    if depth < 1:
        raise ValidationError(["chain depth must be a positive integer"])
    if sorted(side_order) != sorted(SIDES):
        raise ValidationError([f"side order must be a permutation of {SIDES}"])
    d_ab, a_ab, b_ab, e_a_ab, e_b_ab = abelianize(d, a, b, e_a, e_b)
    prepared = {"A": _prepare("A", d_ab, a_ab, e_a_ab), "B": _prepare("B", d_ab, b_ab, e_b_ab)}
    sides = [prepared[name] for name in side_order]

    has_diffuse = any(side.diffuse_labels for side in sides)
    bounds: list[DepthBound] = []
    previous = None
    status = STATUS_EXACT if not has_diffuse else STATUS_BOUNDS_ONLY
    used_depth = 1
    for current in range(1, (depth if has_diffuse else 1) + 1):
        state, chains, finals, bound = _run_core(d_ab, sides, current)
        used_depth = current
        if not has_diffuse:
            break
        bounds.append(bound)
        signature = state.product.signature()
        if signature == previous:
            status = STATUS_STABLE
            break
        previous = signature
    if status == STATUS_BOUNDS_ONLY:
        _LOGGER.warning("Diffuse core did not stabilize within depth %d", depth)
    else:
        _LOGGER.debug("Core %s at depth %d", status, used_depth)

    for side in sides:
        state = _peel(state, side, finals[side.name])

    cells: dict[tuple[str, str], dict[int, dict[str, Fraction]]] = {}
    for side in sides:
        for label, located in _cell_locations(state, side, chains[side.name], finals[side.name]).items():
            cells[(side.name, label)] = located

    algebra, base_embedding = _amplify(state, d_ab, d)
    structural = rdim(algebra)
    formula = rdim_formula(a, b, d)
    truncated, limit = _limits(a, b, d)
    provenance = tuple(
        ProvenanceRecord(name, summand.label, _full_location(cells[(name, summand.label)], d, algebra.labels))
        for name, original in (("A", a), ("B", b))
        for summand in original.summands
    )
    convergence = ConvergenceReport(
        status, used_depth if has_diffuse else None, tuple(bounds), truncated, limit
    )
    result = ProductResult(
        algebra=algebra,
        rdim_structural=structural,
        rdim_formula=formula,
        additivity_check=additivity_check(structural, formula),
        convergence=convergence,
        lineage=LineageSummary.from_records(state.lineage, algebra.labels),
        provenance=provenance,
        base_embedding=base_embedding,
    )
    _LOGGER.debug("Product %s (rdim %s)", algebra, structural)
    return EngineOutcome(result, state, cells)


def product_general(
    a: AlgebraDesc,
    b: AlgebraDesc,
    d: AtomicSubalgebra,
    e_a: EmbeddingSpec,
    e_b: EmbeddingSpec,
    depth: int = DEFAULT_DEPTH,
    side_order: Sequence[str] = SIDES,
) -> ProductResult:
    """A *_D B for an atomic type I base D and arbitrary inputs."""
    return run_product(a, b, d, e_a, e_b, depth, side_order).result


def compute_product(
    a: AlgebraDesc,
    b: AlgebraDesc,
    d: AtomicSubalgebra,
    e_a: EmbeddingSpec,
    e_b: EmbeddingSpec,
    depth: int = DEFAULT_DEPTH,
) -> ProductResult:
    """Closed form when the inputs have one, the general engine otherwise."""
    validate_inputs(a, b, d, e_a, e_b)
    try:
        closed_form_shape(a, b)
    except ShapeMismatch:
        return product_general(a, b, d, e_a, e_b, depth)
    return closed_form_product(a, b, d, e_a, e_b)


def check_compression_consistency(
    a: AlgebraDesc,
    b: AlgebraDesc,
    d: AtomicSubalgebra,
    e_a: EmbeddingSpec,
    e_b: EmbeddingSpec,
    label: str,
    depth: int = DEFAULT_DEPTH,
) -> tuple[str, AlgebraDesc, AlgebraDesc]:
    """Compare two ways of computing pMp for p the central support of an A summand.

    One compresses the product directly. The other freezes the summand to
    its D-corners, cuts that product down to the corners and amalgamates
    the summand back over pD. Returns (check, direct, rebuilt).
    """
    outcome = run_product(a, b, d, e_a, e_b, depth)
    direct = canonicalize(compress(outcome.result.algebra, outcome.result.location_of("A", label)))

    index = a.index_of(label)
    summand = a.summand(label)
    frozen, e_frozen, cells = underline(a, d, e_a, [label])
    frozen_outcome = run_product(frozen, b, d, e_frozen, e_b, depth)
    frozen_result = frozen_outcome.result
    pieces = cells[label]

    support: dict[str, ExtScalar] = {}
    for _, cell_label in pieces:
        allocation = frozen_result.location_of("A", cell_label).allocation
        for out, amount in zip(frozen_result.algebra.labels, allocation, strict=True):
            support[out] = support.get(out, ZERO) + amount
    p = ProjectionSpec(tuple(support.get(out, ZERO) for out in frozen_result.algebra.labels))
    corner = compress(frozen_result.algebra, p)

    blocks = tuple(DBlock(d.blocks[k].size, e_a.entry(k, index), d.blocks[k].label) for k, _ in pieces)
    p_base = AtomicSubalgebra(blocks)
    rows = []
    for k, cell_label in pieces:
        located = frozen_outcome.cell_locations[("A", cell_label)][k]
        rows.append(tuple(ExtScalar.of(located.get(out, 0)) for out in corner.labels))
    summand_alg = AlgebraDesc((summand,))
    summand_rows = tuple((e_a.entry(k, index),) for k, _ in pieces)
    rebuilt = run_product(
        corner, summand_alg, p_base, EmbeddingSpec(tuple(rows)), EmbeddingSpec(summand_rows), depth
    ).result.algebra

    check = CHECK_MATCH if direct.signature() == rebuilt.signature() else CHECK_MISMATCH
    if check == CHECK_MISMATCH:
        _LOGGER.warning("Compression check for %s: %s vs %s", label, direct, rebuilt)
    return check, direct, rebuilt
