"""Self-checking reproductions of known products.

Each demo builds a finite truncation of a family with a known answer, runs
the calculator on it and compares against the exact expected value.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .algebra import AlgebraDesc, Summand, TruncationNote
from .const import DEFAULT_DEPTH, DEFAULT_TRUNCATE, DEMO_NAMES
from .dimension import limit_note, tail_flags
from .embedding import AtomicSubalgebra, DBlock, EmbeddingSpec
from .exactnum import INF, DimValue, ExtScalar
from .exceptions import ValidationError
from .product import ProductResult, closed_form_product, compute_product, product_general

_LOGGER = logging.getLogger(__name__)


@dataclass
class DemoResult:
    """Outcome of one demo run."""

    name: str
    result: ProductResult
    expected: AlgebraDesc
    passed: bool
    notes: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "demo": self.name,
            "passed": self.passed,
            "expected": self.expected.to_dict(),
            "notes": list(self.notes),
            **self.result.to_dict(),
            **self.extra,
        }


def _family(
    name: str, template: str, count: int, terms_at: Callable[[int], Iterable[Summand]]
) -> AlgebraDesc:
    """First ``count`` terms of a family, labelled name1, name2, ..."""
    summands = []
    for i in range(1, count + 1):
        summands.extend(terms_at(i))
    positive, negative = tail_flags(lambda i: list(terms_at(i)))
    note = TruncationNote(template, count, positive, negative)
    return AlgebraDesc(
        tuple(summand.with_label(f"{name}{index}") for index, summand in enumerate(summands, start=1)),
        note,
    )


def _base(family: AlgebraDesc) -> AtomicSubalgebra:
    return AtomicSubalgebra(
        tuple(DBlock(s.size, s.minimal_trace, s.label) for s in family.summands), family.truncation
    )


def _grouped(d: AtomicSubalgebra, groups: list[list[int]], name: str) -> tuple[AlgebraDesc, EmbeddingSpec]:
    """One diffuse summand per group of D-blocks, each block sitting in its group."""
    summands = []
    rows = [[ExtScalar.of(0)] * len(groups) for _ in d.blocks]
    for column, group in enumerate(groups):
        trace = sum((d.blocks[k].minimal_trace.finite() for k in group), Fraction(0))
        summands.append(Summand.diffuse(trace, f"{name}{column + 1}"))
        for k in group:
            rows[k][column] = d.blocks[k].minimal_trace
    return AlgebraDesc(tuple(summands)), EmbeddingSpec(tuple(tuple(row) for row in rows))


def _matches(result: ProductResult, expected: AlgebraDesc) -> bool:
    return result.algebra.signature() == expected.signature()


# =============================================================================
# Demos
# =============================================================================


def demo_pi26(truncate: int = DEFAULT_TRUNCATE, depth: int = DEFAULT_DEPTH) -> DemoResult:
    """D = (+) C(1/i); A pairs blocks (1,2), (3,4), ...; B pairs 1, (2,3), (4,5), ...

    Both sides are diffuse, so the product is one free factor with
    s = sum 1/i^2 and t = sum 1/i, increasing to pi^2/6 and inf.
    """
    d = _base(_family("D", "C(1/i)", truncate, lambda i: [Summand.matrix(1, Fraction(1, i))]))
    a_groups = [list(range(k, min(k + 2, truncate))) for k in range(0, truncate, 2)]
    b_groups = [[0]] + [list(range(k, min(k + 2, truncate))) for k in range(1, truncate, 2)]
    a, e_a = _grouped(d, a_groups, "A")
    b, e_b = _grouped(d, b_groups, "B")
    result = compute_product(a, b, d, e_a, e_b, depth)
    s = sum((Fraction(1, i * i) for i in range(1, truncate + 1)), Fraction(0))
    t = sum((Fraction(1, i) for i in range(1, truncate + 1)), Fraction(0))
    expected = AlgebraDesc((Summand.free_factor(s, t, "P"),))
    notes = [f"s = {s}, monotone increasing to pi^2/6", f"t = {t}, increasing to inf"]
    return DemoResult("pi26", result, expected, _matches(result, expected), notes)


def demo_undef_rdim(truncate: int = 3, depth: int = DEFAULT_DEPTH) -> DemoResult:
    """D = (+) C(1), A = B = (+) C(1/2) + C(1/2) per block.

    Each block gives C^2 * C^2 over C, a diffuse hyperfinite summand, so the
    truncation is ``truncate`` copies of H(1) with rdim 0 while the rdim of
    the declared family is undefined.
    """
    d = _base(_family("D", "C(1)", truncate, lambda i: [Summand.matrix(1, 1)]))

    def halves(i: int) -> list[Summand]:
        return [Summand.matrix(1, Fraction(1, 2)), Summand.matrix(1, Fraction(1, 2))]

    a = _family("A", "C(1/2) (+) C(1/2)", truncate, halves)
    b = _family("B", "C(1/2) (+) C(1/2)", truncate, halves)
    rows = tuple(
        tuple(ExtScalar.of(Fraction(1, 2)) if column // 2 == k else ExtScalar.of(0) for column in range(2 * truncate))
        for k in range(truncate)
    )
    e = EmbeddingSpec(rows)
    result = compute_product(a, b, d, e, e, depth)
    expected = AlgebraDesc(tuple(Summand.diffuse(1, f"P{i}") for i in range(1, truncate + 1)))
    limit = result.convergence.limit_rdim
    passed = (
        _matches(result, expected)
        and result.rdim_structural == DimValue.of(0)
        and limit is not None
        and limit.is_undefined
    )
    notes = [f"rdim of the truncation {result.rdim_structural}", f"declared family: {limit_note(limit)}"]
    return DemoResult("undef-rdim", result, expected, passed, notes)


def demo_rr(truncate: int = DEFAULT_TRUNCATE, depth: int = DEFAULT_DEPTH) -> DemoResult:
    """H(1) * H(1) over C(1/2) + C(1/2) is F(1/2; 1).

    The chain engine and the closed form must agree. The semifinite variant
    H(inf) * H(inf) over (+) M(inf; 2^-i) reports partial sums of 1/3.
    """
    d = AtomicSubalgebra.of([DBlock.of(1, Fraction(1, 2)), DBlock.of(1, Fraction(1, 2))])
    a = AlgebraDesc((Summand.diffuse(1, "A1"),))
    b = AlgebraDesc((Summand.diffuse(1, "B1"),))
    e = EmbeddingSpec.of([[Fraction(1, 2)], [Fraction(1, 2)]])
    chained = product_general(a, b, d, e, e, depth)
    closed = closed_form_product(a, b, d, e, e)
    expected = AlgebraDesc((Summand.free_factor(Fraction(1, 2), 1, "P"),))
    passed = _matches(chained, expected) and _matches(closed, expected)

    semi_d = _base(
        _family("D", "M(inf; 1/2^i)", truncate, lambda i: [Summand.matrix(INF, Fraction(1, 2**i))])
    )
    semi_a = AlgebraDesc((Summand.diffuse(INF, "A1"),))
    semi_b = AlgebraDesc((Summand.diffuse(INF, "B1"),))
    semi_e = EmbeddingSpec(tuple((block.minimal_trace,) for block in semi_d.blocks))
    semi = closed_form_product(semi_a, semi_b, semi_d, semi_e, semi_e)
    partial = (1 - Fraction(1, 4**truncate)) / 3
    semi_expected = AlgebraDesc((Summand.free_factor(partial, INF, "P"),))
    passed = passed and _matches(semi, semi_expected)
    notes = [
        f"chain engine {chained.convergence.note}",
        "matches the diffuse closed form" if _matches(closed, expected) else "closed form differs",
        f"semifinite truncation {semi.algebra}, s increasing to 1/3",
    ]
    extra = {"semifinite": semi.to_dict()}
    return DemoResult("rr", chained, expected, passed, notes, extra)


def demo_ff(truncate: int = DEFAULT_TRUNCATE, depth: int = DEFAULT_DEPTH) -> DemoResult:
    """F(1; 1) * F(2; 1) over C(1) is F(4; 1), i.e. L(F_2) * L(F_3) = L(F_5)."""
    d = AtomicSubalgebra.of([DBlock.of(1, 1)])
    a = AlgebraDesc((Summand.free_factor(1, 1, "A1"),))
    b = AlgebraDesc((Summand.free_factor(2, 1, "B1"),))
    e = EmbeddingSpec.of([[1]])
    closed = closed_form_product(a, b, d, e, e)
    peeled = product_general(a, b, d, e, e, depth)
    expected = AlgebraDesc((Summand.free_factor(4, 1, "P"),))
    passed = _matches(closed, expected) and _matches(peeled, expected)
    notes = ["free factor closed form", f"general engine gives {peeled.algebra}"]
    return DemoResult("ff", closed, expected, passed, notes)


def demo_finf(truncate: int = DEFAULT_TRUNCATE, depth: int = DEFAULT_DEPTH) -> DemoResult:
    """A = (+)_{i<N} F(1; 2^-i) (+) F(1; 2^-(N-1)), B = F(2; 1), D = C(1).

    rdim(A) = N, so the product is F(N + 3; 1), increasing to F(inf; 1).
    """
    if truncate < 2:
        raise ValidationError(["demo finf needs a truncation of at least 2"])
    traces = [Fraction(1, 2**i) for i in range(1, truncate)] + [Fraction(1, 2 ** (truncate - 1))]
    a = AlgebraDesc(tuple(Summand.free_factor(1, t, f"A{i}") for i, t in enumerate(traces, start=1)))
    b = AlgebraDesc((Summand.free_factor(2, 1, "B1"),))
    d = AtomicSubalgebra.of([DBlock.of(1, 1)])
    e_a = EmbeddingSpec((tuple(ExtScalar.of(t) for t in traces),))
    e_b = EmbeddingSpec.of([[1]])
    result = compute_product(a, b, d, e_a, e_b, depth)
    peeled = product_general(a, b, d, e_a, e_b, depth)
    expected = AlgebraDesc((Summand.free_factor(truncate + 3, 1, "P"),))
    passed = _matches(result, expected) and _matches(peeled, expected)
    notes = [f"s = {truncate + 3}, increasing without bound: F(inf; 1) in the limit"]
    return DemoResult("finf", result, expected, passed, notes)


DEMOS: dict[str, Callable[[int, int], DemoResult]] = {
    "pi26": demo_pi26,
    "undef-rdim": demo_undef_rdim,
    "rr": demo_rr,
    "ff": demo_ff,
    "finf": demo_finf,
}


def run_demo(name: str, truncate: int | None = None, depth: int = DEFAULT_DEPTH) -> DemoResult:
    """Run a named demo; ``truncate`` None keeps the demo's own default."""
    if name not in DEMO_NAMES:
        raise ValidationError([f"unknown demo {name!r}; choose from {', '.join(DEMO_NAMES)}"])
    demo = DEMOS[name]
    outcome = demo(depth=depth) if truncate is None else demo(truncate, depth)
    level = logging.DEBUG if outcome.passed else logging.WARNING
    _LOGGER.log(level, "Demo %s %s: %s", name, "passed" if outcome.passed else "failed", outcome.result.algebra)
    return outcome
