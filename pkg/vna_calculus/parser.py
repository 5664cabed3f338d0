"""Problem-file language.

A problem file is line oriented::

    # comments run to the end of the line
    option depth = 8
    subalg D = C(1/2), C(1/2)
    algebra A = H(1)
    algebra B = M(2; 1/4) (+) FG(1/32; 1/2)
    embed D -> A : [[1/2], [1/2]]
    embed D -> B : [[1/4, 1/4], [1/4, 1/4]]

A definition body is either explicit summands (``(+)`` or ``,``
separated) or ``repeat i=1..N: <template>`` for the first N terms of a
countable family. Sizes and traces are exact integer arithmetic
expressions over ``+ - * / ^``, parentheses, the repeat index and
``inf``; ``N`` stands for the ``truncate`` option.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from .algebra import AlgebraDesc, Summand, TruncationNote, validate_summand
from .config import resolve_options
from .const import CONF_TRUNCATE
from .dimension import tail_flags
from .embedding import AtomicSubalgebra, DBlock, EmbeddingSpec
from .exactnum import INF, ExtScalar
from .exceptions import ParseError, ValidationError

_LOGGER = logging.getLogger(__name__)

GRAMMAR = r"""
start: _NL* (statement _NL+)*

?statement: algebra_def
          | subalg_def
          | embed_def
          | option_def

algebra_def: "algebra" NAME "=" body
subalg_def: "subalg" NAME "=" body
embed_def: "embed" NAME "->" NAME ":" table
option_def: "option" NAME "=" (INT | NAME)

?body: summands
     | "repeat" NAME "=" expr ".." expr ":" summands -> repeat

summands: summand ((SUM | ",") summand)*

summand: "M" "(" expr ";" expr ")" -> matrix
       | "H" "(" expr ")" -> diffuse
       | "FG" "(" expr ";" expr ")" -> free_factor
       | "C" "(" expr ")" -> scalar

table: "[" row ("," row)* "]"
row: "[" expr ("," expr)* "]"

?expr: term
     | expr "+" term -> add
     | expr "-" term -> sub

?term: factor
     | term "*" factor -> mul
     | term "/" factor -> div

?factor: power
       | "-" factor -> neg

?power: atom
      | atom "^" factor -> pow

?atom: INT -> number
     | NAME -> variable
     | "(" expr ")"

SUM: "(+)"
COMMENT: /#[^\n]*/
_NL: /(\r?\n[\t ]*)+/

%import common.CNAME -> NAME
%import common.INT
%import common.WS_INLINE
%ignore WS_INLINE
%ignore COMMENT
"""

INF_NAME = "inf"
TRUNCATE_NAME = "N"

Value = Fraction | ExtScalar
Env = Mapping[str, Fraction]


def _position(meta: Any) -> tuple[int, int]:
    return getattr(meta, "line", 0), getattr(meta, "column", 0)


# =============================================================================
# Expressions
# =============================================================================


@dataclass(frozen=True)
class Expr:
    """Arithmetic expression node."""

    op: str
    args: tuple[Any, ...]
    line: int = 0
    column: int = 0

    def evaluate(self, env: Env) -> Value:
        if self.op == "number":
            return Fraction(self.args[0])
        if self.op == "variable":
            name = self.args[0]
            if name == INF_NAME:
                return INF
            if name not in env:
                raise self.error(f"undefined reference {name!r}")
            return env[name]
        values = [arg.evaluate(env) for arg in self.args]
        if any(isinstance(value, ExtScalar) for value in values):
            return self._infinite(values)
        if self.op == "neg":
            return -values[0]
        left, right = values
        if self.op == "add":
            return left + right
        if self.op == "sub":
            return left - right
        if self.op == "mul":
            return left * right
        if self.op == "div":
            if right == 0:
                raise self.error("division by zero")
            return left / right
        if right.denominator != 1:
            raise self.error("exponents must be integers")
        if left == 0 and right < 0:
            raise self.error("division by zero")
        return left ** int(right)

    def _infinite(self, values: list[Value]) -> ExtScalar:
        try:
            scalars = [ExtScalar.of(value) for value in values]
        except ValueError as err:
            raise self.error(str(err)) from err
        if self.op == "add":
            return scalars[0] + scalars[1]
        if self.op == "mul":
            return scalars[0] * scalars[1]
        if self.op == "div" and not scalars[1].is_infinite:
            return scalars[0] / scalars[1]
        raise self.error(f"{self.op} is not defined on inf here")

    def scalar(self, env: Env) -> ExtScalar:
        value = self.evaluate(env)
        try:
            return ExtScalar.of(value)
        except ValueError as err:
            raise self.error(f"expected a nonnegative value, got {value}") from err

    def integer(self, env: Env) -> int:
        value = self.evaluate(env)
        if isinstance(value, ExtScalar) or value.denominator != 1:
            raise self.error(f"expected an integer, got {value}")
        return int(value)

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.column)


@dataclass(frozen=True)
class SummandTemplate:
    """A summand whose parameters may mention the repeat index."""

    kind: str
    args: tuple[Expr, ...]
    line: int = 0
    column: int = 0

    def build(self, env: Env, label: str) -> Summand:
        values = [arg.scalar(env) for arg in self.args]
        if self.kind == "matrix":
            summand = Summand.matrix(values[0], values[1], label)
        elif self.kind == "scalar":
            summand = Summand.matrix(1, values[0], label)
        elif self.kind == "diffuse":
            summand = Summand.diffuse(values[0], label)
        else:
            summand = Summand.free_factor(values[0], values[1], label)
        errors = validate_summand(summand)
        if errors:
            raise ParseError(errors[0], self.line, self.column)
        return summand

    def block(self, env: Env, label: str) -> DBlock:
        if self.kind not in ("matrix", "scalar"):
            raise ParseError("subalgebra blocks must be C(t) or M(n; t)", self.line, self.column)
        summand = self.build(env, label)
        return DBlock(summand.size, summand.minimal_trace, label)


@dataclass(frozen=True)
class Body:
    """Right-hand side of an algebra or subalgebra definition."""

    templates: tuple[SummandTemplate, ...]
    variable: str | None = None
    start: Expr | None = None
    stop: Expr | None = None
    source: str = ""

    @property
    def is_repeat(self) -> bool:
        return self.variable is not None

    def terms(self, env: Env) -> list[tuple[Env, SummandTemplate]]:
        """Expand into (environment, template) pairs in order."""
        if not self.is_repeat:
            return [(env, template) for template in self.templates]
        first = self.start.integer(env)
        last = self.stop.integer(env)
        if last < first:
            raise self.stop.error(f"empty repeat range {first}..{last}")
        return [
            ({**env, self.variable: Fraction(i)}, template)
            for i in range(first, last + 1)
            for template in self.templates
        ]


@dataclass(frozen=True)
class Statement:
    kind: str
    name: str
    line: int
    column: int
    body: Body | None = None
    target: str | None = None
    rows: tuple[tuple[Expr, ...], ...] = ()
    value: Any = None


def _binary(op: str) -> Callable[..., Expr]:
    def build(self, meta, children):
        return Expr(op, tuple(children), *_position(meta))

    return build


def _summand(kind: str) -> Callable[..., SummandTemplate]:
    def build(self, meta, children):
        return SummandTemplate(kind, tuple(children), *_position(meta))

    return build


@v_args(meta=True)
class _TreeBuilder(Transformer):
    """Turn the parse tree into statements and expression nodes."""

    def __init__(self, text: str) -> None:
        super().__init__()
        self._text = text

    def _source(self, meta: Any) -> str:
        return self._text[meta.start_pos : meta.end_pos]

    def number(self, meta, children):
        return Expr("number", (int(children[0]),), *_position(meta))

    def variable(self, meta, children):
        return Expr("variable", (str(children[0]),), *_position(meta))

    add = _binary("add")
    sub = _binary("sub")
    mul = _binary("mul")
    div = _binary("div")
    pow = _binary("pow")
    neg = _binary("neg")

    matrix = _summand("matrix")
    scalar = _summand("scalar")
    diffuse = _summand("diffuse")
    free_factor = _summand("free_factor")

    def summands(self, meta, children):
        return Body(tuple(child for child in children if isinstance(child, SummandTemplate)))

    def repeat(self, meta, children):
        variable, start, stop, body = children
        return Body(body.templates, str(variable), start, stop, self._source(meta))

    def row(self, meta, children):
        return tuple(children)

    def table(self, meta, children):
        return tuple(children)

    def algebra_def(self, meta, children):
        return Statement("algebra", str(children[0]), *_position(meta), body=children[1])

    def subalg_def(self, meta, children):
        return Statement("subalg", str(children[0]), *_position(meta), body=children[1])

    def embed_def(self, meta, children):
        source, target, rows = children
        return Statement("embed", str(source), *_position(meta), target=str(target), rows=rows)

    def option_def(self, meta, children):
        return Statement("option", str(children[0]), *_position(meta), value=str(children[1]))

    def start(self, meta, children):
        return [child for child in children if child is not None]


_PARSER = Lark(GRAMMAR, parser="lalr", propagate_positions=True, maybe_placeholders=True)


# =============================================================================
# Problem files
# =============================================================================


@dataclass
class ProblemFile:
    """Parsed problem: named algebras, one base, embeddings and options."""

    algebras: dict[str, AlgebraDesc] = field(default_factory=dict)
    base_name: str | None = None
    base: AtomicSubalgebra | None = None
    embeddings: dict[str, EmbeddingSpec] = field(default_factory=dict)
    options: dict[str, str] = field(default_factory=dict)
    repeats: dict[str, str] = field(default_factory=dict)

    def algebra(self, name: str) -> AlgebraDesc:
        """Look up a named algebra (or the base, viewed as an algebra)."""
        if name in self.algebras:
            return self.algebras[name]
        if name == self.base_name and self.base is not None:
            return self.base.as_algebra()
        raise ValidationError([f"undefined algebra {name!r}"])

    def product_inputs(self) -> tuple[AlgebraDesc, AlgebraDesc, AtomicSubalgebra, EmbeddingSpec, EmbeddingSpec]:
        """(A, B, D, e_A, e_B) in the order the embeddings were declared."""
        if self.base is None:
            raise ValidationError(["no subalgebra defined"])
        names = list(self.embeddings)
        if len(names) != 2:
            raise ValidationError([f"a product needs exactly two embeddings, found {len(names)}"])
        first, second = names
        return (
            self.algebras[first],
            self.algebras[second],
            self.base,
            self.embeddings[first],
            self.embeddings[second],
        )

    @property
    def ambient_names(self) -> list[str]:
        return list(self.embeddings)


def _truncation(name: str, body: Body, env: Env, count: int) -> TruncationNote | None:
    if not body.is_repeat:
        return None

    def terms_at(i: int) -> list[Summand]:
        local = {**env, body.variable: Fraction(i)}
        return [template.build(local, name) for template in body.templates]

    try:
        positive, negative = tail_flags(terms_at)
    except ParseError as err:
        _LOGGER.debug("Tail of %s not sampled: %s", name, err)
        positive = negative = False
    return TruncationNote(body.source, count, positive, negative)


def parse_problem(text: str, truncate: int | None = None) -> ProblemFile:
    """Parse a problem file.

    ``truncate`` overrides the file's ``option truncate`` and fixes the
    value of ``N`` in repeat ranges. The effective value is kept in
    ``options`` so a rendered problem reparses to the same terms.
    """
    try:
        tree = _PARSER.parse(text if text.endswith("\n") else text + "\n")
        statements = _TreeBuilder(text).transform(tree)
    except UnexpectedInput as err:
        raise ParseError(f"syntax error near {_near(err)}", err.line, err.column) from err
    except VisitError as err:
        raise ParseError(str(err.orig_exc), 0, 0) from err

    problem = ProblemFile()
    for statement in statements:
        if statement.kind == "option":
            problem.options[statement.name] = statement.value
    try:
        options = resolve_options(problem.options, {CONF_TRUNCATE: truncate})
    except ValidationError as err:
        raise ParseError("; ".join(err.problems), 1, 1) from err
    if truncate is not None:
        problem.options[CONF_TRUNCATE] = str(options[CONF_TRUNCATE])
    env: dict[str, Fraction] = {TRUNCATE_NAME: Fraction(options[CONF_TRUNCATE])}

    for statement in statements:
        if statement.kind == "algebra":
            _define_algebra(problem, statement, env)
        elif statement.kind == "subalg":
            _define_subalgebra(problem, statement, env)
        elif statement.kind == "embed":
            _define_embedding(problem, statement, env)
    _LOGGER.debug(
        "Parsed %d algebras, base %s, %d embeddings", len(problem.algebras), problem.base_name, len(problem.embeddings)
    )
    return problem


def _check_name(problem: ProblemFile, statement: Statement) -> None:
    if statement.name in problem.algebras or statement.name == problem.base_name:
        raise ParseError(f"{statement.name!r} is already defined", statement.line, statement.column)


def _define_algebra(problem: ProblemFile, statement: Statement, env: Env) -> None:
    _check_name(problem, statement)
    terms = statement.body.terms(env)
    summands = [
        template.build(local, f"{statement.name}{index}")
        for index, (local, template) in enumerate(terms, start=1)
    ]
    note = _truncation(statement.name, statement.body, env, len(summands))
    problem.algebras[statement.name] = AlgebraDesc(tuple(summands), note)
    if statement.body.is_repeat:
        problem.repeats[statement.name] = statement.body.source


def _define_subalgebra(problem: ProblemFile, statement: Statement, env: Env) -> None:
    if problem.base_name is not None:
        raise ParseError("only one subalgebra may be defined", statement.line, statement.column)
    _check_name(problem, statement)
    terms = statement.body.terms(env)
    blocks = [
        template.block(local, f"{statement.name}{index}")
        for index, (local, template) in enumerate(terms, start=1)
    ]
    note = _truncation(statement.name, statement.body, env, len(blocks))
    problem.base_name = statement.name
    problem.base = AtomicSubalgebra(tuple(blocks), note)
    if statement.body.is_repeat:
        problem.repeats[statement.name] = statement.body.source


def _define_embedding(problem: ProblemFile, statement: Statement, env: Env) -> None:
    if statement.name != problem.base_name:
        raise ParseError(f"undefined reference {statement.name!r}", statement.line, statement.column)
    if statement.target not in problem.algebras:
        raise ParseError(f"undefined reference {statement.target!r}", statement.line, statement.column)
    if statement.target in problem.embeddings:
        raise ParseError(f"{statement.target!r} is already embedded", statement.line, statement.column)
    rows = tuple(tuple(entry.scalar(env) for entry in row) for row in statement.rows)
    problem.embeddings[statement.target] = EmbeddingSpec(rows)


def _near(err: UnexpectedInput) -> str:
    token = getattr(err, "token", None)
    if token is not None:
        return repr(str(token))
    char = getattr(err, "char", None)
    return repr(char) if char is not None else "end of input"


# =============================================================================
# Rendering
# =============================================================================


def render_problem(problem: ProblemFile) -> str:
    """Render a problem back into the file language."""
    lines = [f"option {key} = {value}" for key, value in problem.options.items()]
    if problem.base is not None:
        body = problem.repeats.get(problem.base_name) or str(problem.base)
        lines.append(f"subalg {problem.base_name} = {body}")
    for name, algebra in problem.algebras.items():
        lines.append(f"algebra {name} = {problem.repeats.get(name) or algebra}")
    for target, embedding in problem.embeddings.items():
        rows = ", ".join("[" + ", ".join(str(entry) for entry in row) + "]" for row in embedding.rows)
        lines.append(f"embed {problem.base_name} -> {target} : [{rows}]")
    return "\n".join(lines) + "\n"


def problem_from_parts(
    algebras: Mapping[str, AlgebraDesc],
    base_name: str,
    base: AtomicSubalgebra,
    embeddings: Mapping[str, EmbeddingSpec],
    options: Mapping[str, Any] | None = None,
) -> ProblemFile:
    """Assemble a ProblemFile from already built parts."""
    return ProblemFile(
        dict(algebras),
        base_name,
        base,
        dict(embeddings),
        {key: str(value) for key, value in (options or {}).items()},
    )

