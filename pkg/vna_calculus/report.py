"""Text and JSON rendering of calculator results."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from typing import Any

from .algebra import AlgebraDesc, classify, free_group_parameter
from .dimension import limit_note, limit_rdim, rdim
from .exactnum import DimValue
from .product import ProductResult


def render_json(payload: Mapping[str, Any]) -> str:
    """Stable JSON text; keys keep insertion order, which callers fix."""
    return json.dumps(payload, indent=2, default=str)


def algebra_payload(name: str, a: AlgebraDesc) -> dict[str, Any]:
    """Machine-readable record of one description."""
    note = a.truncation
    return {
        "name": name,
        "algebra": a.to_dict(),
        "class": classify(a).name,
        "total_trace": str(a.total_trace),
        "rdim": str(rdim(a)),
        "truncation": None
        if note is None
        else {
            "template": note.template,
            "count": note.count,
            "limit": limit_note(limit_rdim(a)),
        },
    }


def describe_summands(a: AlgebraDesc) -> list[str]:
    """One line per summand, free factors also shown as L(F_r)."""
    lines = []
    for summand in a.summands:
        line = f"  {summand.label}: {summand}"
        if summand.is_free_factor:
            r = free_group_parameter(summand)
            if r is not None:
                line += f"  = L(F_{r}) scaled to trace {summand.trace}"
        lines.append(line)
    return lines


def format_algebra(name: str, a: AlgebraDesc) -> str:
    lines = [f"=== {name} ===", f"{a}", f"class {classify(a).name}, total trace {a.total_trace}"]
    lines.extend(describe_summands(a))
    return "\n".join(lines)


def format_dimension(kind: str, name: str, value: DimValue, a: AlgebraDesc) -> str:
    """``rdim A = 0 (declared family: undef in limit)`` style line."""
    text = f"{kind} {name} = {value}"
    if a.truncation is not None:
        text += f" (declared family: {limit_note(limit_rdim(a))})"
    return text


def format_product(result: ProductResult) -> str:
    """Human-readable product report."""
    lines = ["=== Product ===", str(result.algebra)]
    lines.extend(describe_summands(result.algebra))
    lines.append("")
    lines.append(f"rdim (structural): {result.rdim_structural}")
    lines.append(f"rdim (formula):    {result.rdim_formula}")
    lines.append(f"additivity check:  {result.additivity_check}")
    if result.shape is not None:
        lines.append(f"closed form:       {result.shape}")
    lines.append(f"convergence:       {result.convergence.note}")
    for bound in result.convergence.bounds:
        factors = ", ".join(f"F({s}; {t})" for s, t in bound.free_factors) or "none"
        lines.append(f"  depth {bound.depth}: rdim {bound.rdim}, free factors {factors}")
    lines.append("")
    lines.append("=== Lineage ===")
    for rule, count in sorted(result.lineage.counts.items()):
        lines.append(f"  {rule}: {count}")
    for label, record in sorted(result.lineage.summands.items()):
        lines.append(f"  {label} <- {record.rule} ({record.embedding}) from {', '.join(record.sources)}")
    if result.provenance:
        lines.append("")
        lines.append("=== Provenance ===")
        for record in result.provenance:
            where = ", ".join(f"{label}: {amount}" for label, amount in record.location)
            lines.append(f"  {record.side}.{record.label} -> {where}")
    return "\n".join(lines)


def format_problems(problems: Iterable[str]) -> str:
    return "\n".join(f"  - {problem}" for problem in problems)
