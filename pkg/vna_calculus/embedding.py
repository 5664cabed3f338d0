"""Atomic subalgebras, trace-allocation embeddings and simple steps.

An embedding of D = (+)_k M_{n_k} into an algebra A is recorded as a matrix
a[k][i]: the trace that one minimal projection of block k takes inside
summand i of A. Row sums recover the block's minimal trace and column sums,
weighted by block sizes, recover the summand traces.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

from .algebra import (
    AlgebraDesc,
    ProjectionSpec,
    Summand,
    TruncationNote,
    compress,
    is_multimatrix,
    validate_algebra,
)
from .exactnum import ONE, ZERO, ExtScalar, Number, ext_sum
from .exceptions import ValidationError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class DBlock:
    """A block M_n of the amalgamation base with minimal trace t."""

    size: ExtScalar
    minimal_trace: ExtScalar
    label: str = ""

    @classmethod
    def of(cls, size: ExtScalar | Number | str, minimal_trace: ExtScalar | Number | str, label: str = "") -> DBlock:
        return cls(ExtScalar.of(size), ExtScalar.of(minimal_trace), label)

    def as_summand(self) -> Summand:
        return Summand.matrix(self.size, self.minimal_trace, self.label)

    def __str__(self) -> str:
        return str(self.as_summand())


@dataclass(frozen=True)
class AtomicSubalgebra:
    """The amalgamation base D, an atomic type I algebra."""

    blocks: tuple[DBlock, ...]
    truncation: TruncationNote | None = None

    @classmethod
    def of(cls, blocks: Iterable[DBlock], truncation: TruncationNote | None = None) -> AtomicSubalgebra:
        """Build D, labelling unlabelled blocks d1, d2, ..."""
        labelled = []
        for index, block in enumerate(blocks, start=1):
            labelled.append(block if block.label else DBlock(block.size, block.minimal_trace, f"d{index}"))
        return cls(tuple(labelled), truncation)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __str__(self) -> str:
        return ", ".join(str(block) for block in self.blocks)

    @property
    def labels(self) -> list[str]:
        return [block.label for block in self.blocks]

    @property
    def is_abelian(self) -> bool:
        return all(block.size == ONE for block in self.blocks)

    @property
    def total_trace(self) -> ExtScalar:
        return ext_sum(block.size * block.minimal_trace for block in self.blocks)

    def as_algebra(self) -> AlgebraDesc:
        """D viewed as a direct sum of matrix summands."""
        return AlgebraDesc(tuple(block.as_summand() for block in self.blocks), self.truncation)


@dataclass(frozen=True)
class EmbeddingSpec:
    """Allocation matrix: rows are D-blocks, columns are ambient summands."""

    rows: tuple[tuple[ExtScalar, ...], ...]

    @classmethod
    def of(cls, rows: Iterable[Iterable[ExtScalar | Number | str]]) -> EmbeddingSpec:
        return cls(tuple(tuple(ExtScalar.of(value) for value in row) for row in rows))

    def entry(self, k: int, i: int) -> ExtScalar:
        return self.rows[k][i]

    def row(self, k: int) -> tuple[ExtScalar, ...]:
        return self.rows[k]

    def column(self, i: int) -> tuple[ExtScalar, ...]:
        return tuple(row[i] for row in self.rows)

    def column_totals(self) -> ProjectionSpec:
        """Per-summand trace of e = sum of one minimal projection per block."""
        width = len(self.rows[0]) if self.rows else 0
        return ProjectionSpec(tuple(ext_sum(self.column(i)) for i in range(width)))


def atomic_from_algebra(n: AlgebraDesc) -> AtomicSubalgebra:
    """View a purely atomic description as a subalgebra."""
    if not all(summand.is_matrix for summand in n.summands):
        raise ValidationError(["expected matrix summands only"])
    return AtomicSubalgebra(
        tuple(DBlock(summand.size, summand.minimal_trace, summand.label) for summand in n.summands),
        n.truncation,
    )


def validate_subalgebra(d: AtomicSubalgebra) -> list[str]:
    """Check D's blocks; an empty list means valid."""
    if not d.blocks:
        return ["subalgebra must have at least one block"]
    return validate_algebra(d.as_algebra())


def validate_embedding(d: AtomicSubalgebra, a: AlgebraDesc, e: EmbeddingSpec) -> list[str]:
    """Check shape, row sums, column sums and matrix multiplicities."""
    errors = validate_subalgebra(d) + validate_algebra(a)
    if errors:
        return errors
    if len(e.rows) != len(d.blocks):
        return [f"embedding has {len(e.rows)} rows, subalgebra has {len(d.blocks)} blocks"]
    for k, row in enumerate(e.rows):
        if len(row) != len(a.summands):
            errors.append(f"row {k + 1}: {len(row)} entries, algebra has {len(a.summands)} summands")
    if errors:
        return errors

    for k, block in enumerate(d.blocks):
        row_total = ext_sum(e.row(k))
        if row_total != block.minimal_trace:
            errors.append(f"row {k + 1} ({block.label}): sum {row_total} != minimal trace {block.minimal_trace}")

    for i, summand in enumerate(a.summands):
        column_total = ext_sum(block.size * e.entry(k, i) for k, block in enumerate(d.blocks))
        if column_total != summand.total_trace:
            errors.append(
                f"column {i + 1} ({summand.label}): weighted sum {column_total} != summand trace "
                f"{summand.total_trace}"
            )
        if summand.is_matrix:
            for k in range(len(d.blocks)):
                multiple = e.entry(k, i).finite() / summand.minimal_trace.finite()
                if multiple.denominator != 1:
                    errors.append(
                        f"entry ({k + 1}, {i + 1}): {e.entry(k, i)} is not a multiple of minimal trace "
                        f"{summand.minimal_trace}"
                    )
    return errors


def ensure_valid_embedding(d: AtomicSubalgebra, a: AlgebraDesc, e: EmbeddingSpec) -> None:
    """Raise ValidationError unless ``e`` embeds ``d`` unitally in ``a``."""
    errors = validate_embedding(d, a, e)
    if errors:
        raise ValidationError(errors)


def abelian_base(d: AtomicSubalgebra) -> AtomicSubalgebra:
    """eDe for e a sum of one minimal projection per block."""
    return AtomicSubalgebra(
        tuple(DBlock(ONE, block.minimal_trace, block.label) for block in d.blocks),
        d.truncation,
    )


def abelianize_side(d: AtomicSubalgebra, a: AlgebraDesc, e: EmbeddingSpec) -> tuple[AlgebraDesc, EmbeddingSpec]:
    """Compress one ambient algebra to eAe; the allocations carry over."""
    ensure_valid_embedding(d, a, e)
    if d.is_abelian:
        return a, e
    return compress(a, e.column_totals()), e


def abelianize(
    d: AtomicSubalgebra,
    a: AlgebraDesc,
    b: AlgebraDesc,
    e_a: EmbeddingSpec,
    e_b: EmbeddingSpec,
) -> tuple[AtomicSubalgebra, AlgebraDesc, AlgebraDesc, EmbeddingSpec, EmbeddingSpec]:
    """Replace D by the abelian eDe and A, B by their e-corners."""
    a_prime, e_a_prime = abelianize_side(d, a, e_a)
    b_prime, e_b_prime = abelianize_side(d, b, e_b)
    if not d.is_abelian:
        _LOGGER.debug("Abelianized base with %d blocks", len(d))
    return abelian_base(d), a_prime, b_prime, e_a_prime, e_b_prime


def underline(
    a: AlgebraDesc, d: AtomicSubalgebra, e: EmbeddingSpec, labels: Iterable[str]
) -> tuple[AlgebraDesc, EmbeddingSpec, dict[str, list[tuple[int, str]]]]:
    """Replace the named summands of ``a`` by their D-corners.

    Summand i becomes (+)_k M_{n_k} with minimal trace a[k][i]. Returns the
    new algebra, its embedding and, per replaced label, the (block index,
    new label) pairs that now make up its central support.
    """
    targets = set(labels)
    summands: list[Summand] = []
    columns: list[list[ExtScalar]] = []
    cells: dict[str, list[tuple[int, str]]] = {}
    for i, summand in enumerate(a.summands):
        column = e.column(i)
        if summand.label not in targets:
            summands.append(summand)
            columns.append(list(column))
            continue
        cells[summand.label] = []
        for k, amount in enumerate(column):
            if amount.is_zero:
                continue
            cell_label = f"{summand.label}~{d.blocks[k].label}"
            summands.append(Summand.matrix(d.blocks[k].size, amount, cell_label))
            columns.append([amount if j == k else ZERO for j in range(len(d.blocks))])
            cells[summand.label].append((k, cell_label))
    rows = tuple(tuple(column[k] for column in columns) for k in range(len(d.blocks)))
    return AlgebraDesc(tuple(summands)), EmbeddingSpec(rows), cells


class StepKind(StrEnum):
    """Simple step kinds."""

    SPLIT = "split"  # first kind: copy a block with trace weights
    MERGE = "merge"  # second kind: join two blocks of equal minimal trace


@dataclass(frozen=True)
class SimpleStep:
    """One elementary inclusion between multimatrix algebras."""

    kind: StepKind
    blocks: tuple[str, ...]
    targets: tuple[str, ...]
    weights: tuple[ExtScalar, ...] = ()

    @classmethod
    def split(cls, source: str, copies: Sequence[tuple[str, ExtScalar]]) -> SimpleStep:
        return cls(
            StepKind.SPLIT,
            (source,),
            tuple(copy_id for copy_id, _ in copies),
            tuple(weight for _, weight in copies),
        )

    @classmethod
    def merge(cls, first: str, second: str, result: str) -> SimpleStep:
        return cls(StepKind.MERGE, (first, second), (result,))

    @property
    def copy_count(self) -> int:
        return len(self.targets) if self.kind is StepKind.SPLIT else 1

    def __str__(self) -> str:
        if self.kind is StepKind.SPLIT:
            weights = ", ".join(str(weight) for weight in self.weights)
            return f"split {self.blocks[0]} -> {len(self.targets)} copies ({weights})"
        return f"merge {self.blocks[0]} + {self.blocks[1]} -> {self.targets[0]}"


@dataclass
class ReplayBlock:
    """A live block while replaying simple steps."""

    size: int
    minimal_trace: Fraction
    origin: Counter[str] = field(default_factory=Counter)


def _multiplicity(amount: ExtScalar, minimal_trace: ExtScalar) -> int:
    multiple = amount.finite() / minimal_trace.finite()
    if multiple.denominator != 1:
        raise ValidationError([f"allocation {amount} is not a multiple of {minimal_trace}"])
    return multiple.numerator


def _plan(n: AlgebraDesc, m: AlgebraDesc, inclusion: EmbeddingSpec) -> tuple[list[SimpleStep], dict[str, str]]:
    if not (is_multimatrix(n) and is_multimatrix(m)):
        raise ValidationError(["simple steps need finite multimatrix algebras on both sides"])
    ensure_valid_embedding(atomic_from_algebra(n), m, inclusion)

    steps: list[SimpleStep] = []
    pieces: dict[str, list[str]] = {summand.label: [] for summand in m.summands}
    for j, block in enumerate(n.summands):
        destinations = []
        for i, target in enumerate(m.summands):
            amount = inclusion.entry(j, i)
            if not amount.is_zero:
                destinations.extend([target] * _multiplicity(amount, target.minimal_trace))
        if len(destinations) == 1:
            pieces[destinations[0].label].append(block.label)
            continue
        copies = [
            (f"{block.label}>{target.label}#{index}", target.minimal_trace)
            for index, target in enumerate(destinations, start=1)
        ]
        steps.append(SimpleStep.split(block.label, copies))
        for (copy_id, _), target in zip(copies, destinations, strict=True):
            pieces[target.label].append(copy_id)

    finals: dict[str, str] = {}
    for target in m.summands:
        ids = pieces[target.label]
        current = ids[0]
        for index, following in enumerate(ids[1:], start=1):
            result = f"<{target.label}>" if index == len(ids) - 1 else f"<{target.label}:{index}>"
            steps.append(SimpleStep.merge(current, following, result))
            current = result
        finals[target.label] = current
    return steps, finals


def decompose_simple_steps(n: AlgebraDesc, m: AlgebraDesc, inclusion: EmbeddingSpec) -> list[SimpleStep]:
    """Write the inclusion n -> m as splits followed by merges.

    ``inclusion`` has one row per summand of ``n``. Splits come first in the
    order of n's blocks, then merges in the order of m's blocks.
    """
    steps, _ = _plan(n, m, inclusion)
    _LOGGER.debug("Decomposed inclusion into %d simple steps", len(steps))
    return steps


def final_block_ids(n: AlgebraDesc, m: AlgebraDesc, inclusion: EmbeddingSpec) -> dict[str, str]:
    """Map each summand label of ``m`` to the block id that replay leaves for it."""
    _, finals = _plan(n, m, inclusion)
    return finals


def step_prerequisites(steps: Sequence[SimpleStep]) -> list[frozenset[int]]:
    """For each step, the indices of the earlier steps whose blocks it consumes.

    Any order that runs every step after its prerequisites replays to the
    same blocks.
    """
    producer: dict[str, int] = {}
    needs = []
    for index, step in enumerate(steps):
        needs.append(frozenset(producer[block] for block in step.blocks if block in producer))
        for target in step.targets:
            producer[target] = index
    return needs


def _take(blocks: dict[str, ReplayBlock], block_id: str, step: SimpleStep) -> ReplayBlock:
    if block_id not in blocks:
        raise ValidationError([f"{step}: block {block_id!r} is not live"])
    return blocks.pop(block_id)


def replay_steps(n: AlgebraDesc, steps: Iterable[SimpleStep]) -> dict[str, ReplayBlock]:
    """Apply steps to the blocks of ``n`` and return the live blocks by id."""
    blocks = {
        summand.label: ReplayBlock(
            int(summand.size.finite()), summand.minimal_trace.finite(), Counter({summand.label: 1})
        )
        for summand in n.summands
    }
    for step in steps:
        if step.kind is StepKind.SPLIT:
            source = _take(blocks, step.blocks[0], step)
            if sum(weight.finite() for weight in step.weights) != source.minimal_trace:
                raise ValidationError([f"{step}: weights do not add up to {source.minimal_trace}"])
            for copy_id, weight in zip(step.targets, step.weights, strict=True):
                blocks[copy_id] = ReplayBlock(source.size, weight.finite(), Counter(source.origin))
        else:
            first = _take(blocks, step.blocks[0], step)
            second = _take(blocks, step.blocks[1], step)
            if first.minimal_trace != second.minimal_trace:
                raise ValidationError([f"{step}: minimal traces {first.minimal_trace} and {second.minimal_trace} differ"])
            blocks[step.targets[0]] = ReplayBlock(
                first.size + second.size, first.minimal_trace, first.origin + second.origin
            )
    return blocks


def replayed_algebra(n: AlgebraDesc, steps: Iterable[SimpleStep]) -> tuple[AlgebraDesc, EmbeddingSpec]:
    """Replay steps and return the resulting algebra with the induced inclusion."""
    blocks = replay_steps(n, steps)
    ids = list(blocks)
    algebra = AlgebraDesc(
        tuple(Summand.matrix(blocks[block_id].size, blocks[block_id].minimal_trace, block_id) for block_id in ids)
    )
    rows = tuple(
        tuple(ExtScalar.of(blocks[block_id].origin[summand.label] * blocks[block_id].minimal_trace) for block_id in ids)
        for summand in n.summands
    )
    return algebra, EmbeddingSpec(rows)


def _chain_unit(column: Iterable[ExtScalar], depth: int) -> Fraction:
    denominators = [amount.finite().denominator for amount in column if not amount.is_zero]
    return Fraction(1, math.lcm(*denominators) * 2**depth)


def multimatrix_chain(
    a: AlgebraDesc, d: AtomicSubalgebra, e: EmbeddingSpec, depth: int
) -> tuple[AlgebraDesc, EmbeddingSpec]:
    """Replace each diffuse summand by a dyadic matrix approximant.

    A diffuse summand whose D-allocations have least common denominator L
    becomes M_N(u) with u = 2^-depth / L; atomic summands are unchanged and
    the embedding matrix carries over as is.
    """
    if depth < 1:
        raise ValidationError(["chain depth must be a positive integer"])
    if not d.is_abelian:
        raise ValidationError(["approximating chains need an abelian base"])
    if any(summand.is_free_factor for summand in a.summands):
        raise ValidationError(["freeze free factor summands before building a chain"])
    infinite = [summand.label for summand in a.summands if summand.is_diffuse and summand.trace.is_infinite]
    if infinite:
        raise ValidationError([f"diffuse summand {label} has infinite trace" for label in infinite])
    ensure_valid_embedding(d, a, e)
    summands = []
    for i, summand in enumerate(a.summands):
        if not summand.is_diffuse:
            summands.append(summand)
            continue
        unit = _chain_unit(e.column(i), depth)
        size = summand.trace.finite() / unit
        summands.append(Summand.matrix(size, unit, summand.label))
    return a.with_summands(summands), e


def chain_inclusion(
    a: AlgebraDesc, d: AtomicSubalgebra, e: EmbeddingSpec, depth: int
) -> tuple[AlgebraDesc, AlgebraDesc, EmbeddingSpec]:
    """Return the depth and depth+1 approximants with the inclusion between them."""
    lower, _ = multimatrix_chain(a, d, e, depth)
    upper, _ = multimatrix_chain(a, d, e, depth + 1)
    rows = []
    for j, summand in enumerate(lower.summands):
        rows.append(tuple(summand.minimal_trace if i == j else ZERO for i in range(len(upper))))
    return lower, upper, EmbeddingSpec(tuple(rows))
