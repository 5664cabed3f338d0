#!/usr/bin/env python3
"""
m2_oracle.py - Independent check of the partial-isometry rewrite

Evaluates N *_D M_2, with D = C p (+) C (1 - p) and tau(p) = 1/2, straight
from its atom set, atom sizes and the rule fdim(M) = fdim(N) + 1/4, and
compares the answer with vna_calculus.rewrite.m2_rewrite (and optionally
with the general product engine) over a bounded sweep of multimatrix N.
"""

import argparse
import json
import sys
from collections.abc import Iterator, Sequence
from fractions import Fraction
from itertools import combinations_with_replacement, product

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)

# (size, minimal trace)
Block = tuple[int, Fraction]
Shape = tuple

# p is given by how many minimal projections of each block lie under it:
# 0 puts the block under 1 - p, its size puts it wholly under p.


def fdim(blocks: Sequence[Block]) -> Fraction:
    """Free dimension of a normalized multimatrix algebra."""
    return 1 - sum((t * t for _, t in blocks), Fraction(0))


def atom_set(blocks: Sequence[Block], under_p: Sequence[int]) -> list[tuple[int, int]]:
    """Index pairs (j wholly under p, j' wholly under 1 - p) that leave a matrix summand.

    Blocks that p cuts through belong to neither side.
    """
    pairs = []
    for j, ((n_j, t_j), k_j) in enumerate(zip(blocks, under_p, strict=True)):
        if k_j != n_j:
            continue
        for k, ((n_k, t_k), k_k) in enumerate(zip(blocks, under_p, strict=True)):
            if k_k != 0:
                continue
            if t_j / n_j + t_k / n_k > HALF:
                pairs.append((j, k))
    return pairs


def is_admissible(blocks: Sequence[Block], under_p: Sequence[int]) -> bool:
    """tau(p) = 1/2 and neither p nor 1 - p is a minimal central projection."""
    if any(not 0 <= k <= n for (n, _), k in zip(blocks, under_p, strict=True)):
        return False
    total = sum((n * t for n, t in blocks), Fraction(0))
    half = sum((k * t for (_, t), k in zip(blocks, under_p, strict=True)), Fraction(0))
    if 2 * half != total:
        return False
    for counts in (under_p, [n - k for (n, _), k in zip(blocks, under_p, strict=True)]):
        members = [blocks[j] for j, k in enumerate(counts) if k]
        if len(members) == 1 and members[0][0] == 1:
            return False
    return True


def m2_oracle(blocks: Sequence[Block], under_p: Sequence[int]) -> list[Shape]:
    """Sorted summand shapes of N *_D M_2 at N's own trace scale."""
    if not is_admissible(blocks, under_p):
        raise ValueError("p must have half the trace and not be minimal central on either side")
    total = sum((n * t for n, t in blocks), Fraction(0))
    normalized = [(n, t / total) for n, t in blocks]

    atoms = []
    for j, k in atom_set(normalized, under_p):
        (n_j, t_j), (n_k, t_k) = normalized[j], normalized[k]
        size = 2 * n_j * n_k
        atoms.append((size, Fraction(size, 2) * (t_j / n_j + t_k / n_k - HALF)))

    shapes: list[Shape] = [("matrix", Fraction(size), t * total) for size, t in atoms]
    rest = 1 - sum((size * t for size, t in atoms), Fraction(0))
    if rest > 0:
        if sum(n * n for n, _ in blocks) == 4:
            shapes.append(("diffuse", rest * total))
        else:
            s = fdim(normalized) + QUARTER - 1 + sum((t * t for _, t in atoms), Fraction(0))
            shapes.append(("free_factor", s * total * total, rest * total))
    return sorted(shapes)


def engine_shapes(algebra) -> list[Shape]:
    """Sorted summand shapes of a vna_calculus AlgebraDesc."""
    shapes = []
    for summand in algebra.summands:
        if summand.is_matrix:
            shapes.append(("matrix", summand.size.finite(), summand.minimal_trace.finite()))
        elif summand.is_free_factor:
            shapes.append(("free_factor", summand.s.finite(), summand.trace.finite()))
        else:
            shapes.append(("diffuse", summand.trace.finite()))
    return sorted(shapes)


def sweep_instances(max_blocks: int = 4, max_size: int = 3, denominator: int = 16) -> Iterator[tuple]:
    """Normalized multimatrix N with minimal traces k/denominator, paired with every admissible p.

    p ranges over all allocations in whole minimal projections, central or
    not. Of p and 1 - p only the lexicographically larger count is kept.
    """
    kinds = [
        (size, Fraction(k, denominator))
        for size in range(1, max_size + 1)
        for k in range(1, denominator + 1)
        if size * k <= denominator
    ]
    for count in range(2, max_blocks + 1):
        for blocks in combinations_with_replacement(kinds, count):
            if sum(n * t for n, t in blocks) != 1:
                continue
            for under_p in product(*(range(n + 1) for n, _ in blocks)):
                complement = tuple(n - k for (n, _), k in zip(blocks, under_p, strict=True))
                if under_p >= complement and is_admissible(blocks, under_p):
                    yield list(blocks), list(under_p)


def _engine_inputs(blocks: Sequence[Block], under_p: Sequence[int]):
    from vna_calculus.algebra import AlgebraDesc, ProjectionSpec, Summand
    from vna_calculus.embedding import AtomicSubalgebra, DBlock, EmbeddingSpec

    n = AlgebraDesc(tuple(Summand.matrix(size, t, f"N{i}") for i, (size, t) in enumerate(blocks, start=1)))
    p = ProjectionSpec.of([k * t for (_, t), k in zip(blocks, under_p, strict=True)])
    d = AtomicSubalgebra.of([DBlock.of(1, HALF), DBlock.of(1, HALF)])
    e_n = EmbeddingSpec.of(
        [
            [k * t for (_, t), k in zip(blocks, under_p, strict=True)],
            [(size - k) * t for (size, t), k in zip(blocks, under_p, strict=True)],
        ]
    )
    m2 = AlgebraDesc((Summand.matrix(2, HALF, "M1"),))
    return n, p, d, e_n, m2, EmbeddingSpec.of([[HALF], [HALF]])


def compare(blocks: Sequence[Block], under_p: Sequence[int], engine: bool = False) -> list[str]:
    """Mismatches between the oracle and the calculator for one instance."""
    from vna_calculus.exceptions import VnaError
    from vna_calculus.product import product_general
    from vna_calculus.rewrite import m2_rewrite

    expected = m2_oracle(blocks, under_p)
    n, p, d, e_n, m2, e_m2 = _engine_inputs(blocks, under_p)
    label = f"{n} with p = [{', '.join(str(amount) for amount in p.allocation)}]"
    problems = []
    try:
        rewritten = engine_shapes(m2_rewrite(n, p))
    except VnaError as err:
        problems.append(f"{label}: m2_rewrite failed: {err}")
    else:
        if rewritten != expected:
            problems.append(f"{label}: m2_rewrite gave {render(rewritten)}, expected {render(expected)}")
    if engine:
        try:
            general = engine_shapes(product_general(n, m2, d, e_n, e_m2, 1).algebra)
        except VnaError as err:
            problems.append(f"{label}: product_general failed: {err}")
        else:
            if general != expected:
                problems.append(f"{label}: product_general gave {render(general)}, expected {render(expected)}")
    return problems


def format_shape(shape: Shape) -> str:
    """Render one shape the way the calculator prints summands."""
    kind, *params = shape
    if kind == "matrix":
        size, t = params
        return f"C({t})" if size == 1 else f"M({size}; {t})"
    if kind == "free_factor":
        return f"FG({params[0]}; {params[1]})"
    return f"H({params[0]})"


def render(shapes: Sequence[Shape]) -> str:
    return " (+) ".join(format_shape(shape) for shape in shapes)


def run_sweep(max_blocks: int, max_size: int, denominator: int, engine: bool) -> dict:
    """Check every instance of the sweep; return counts and mismatches."""
    checked = 0
    mismatches: list[str] = []
    for blocks, under_p in sweep_instances(max_blocks, max_size, denominator):
        checked += 1
        mismatches.extend(compare(blocks, under_p, engine))
    return {"checked": checked, "mismatches": mismatches}


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Compare the partial-isometry rewrite with its closed formula")
    parser.add_argument("--max-blocks", type=int, default=4, help="Summands of N (default: 4)")
    parser.add_argument("--max-size", type=int, default=3, help="Largest matrix size (default: 3)")
    parser.add_argument("--denominator", type=int, default=16, help="Minimal traces are k/denominator (default: 16)")
    parser.add_argument("--engine", action="store_true", help="Also run the general product engine")
    parser.add_argument("--json", action="store_true", help="Output in JSON format")

    args = parser.parse_args(argv)
    if args.max_blocks < 2 or args.max_size < 1 or args.denominator < 2:
        print("Error: need at least 2 blocks, size 1 and denominator 2", file=sys.stderr)
        return 1

    summary = run_sweep(args.max_blocks, args.max_size, args.denominator, args.engine)
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(f"=== m2 oracle: {summary['checked']} instances ===")
        if summary["mismatches"]:
            for mismatch in summary["mismatches"]:
                print(f"  - {mismatch}")
        else:
            print("No mismatches.")
    return 1 if summary["mismatches"] else 0


if __name__ == "__main__":
    sys.exit(main())
