"""Linear pseudo-Boolean instances: OPB parsing, normalization, evaluation.

Variables are 0-based internally; ``variable_names[i]`` keeps the name used
in the OPB file (``x{i+1}`` for the usual numbering).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

INT64_MAX = 2**63 - 1

Assignment = Sequence[int]


class OpbSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CoefficientOverflow(OverflowError):
    """A coefficient or degree does not fit in a signed 64-bit integer."""


class Literal(NamedTuple):
    var: int
    positive: bool = True

    def value(self, assignment: Assignment) -> int:
        v = assignment[self.var]
        return v if self.positive else 1 - v

    def __neg__(self) -> "Literal":
        return Literal(self.var, not self.positive)


class Term(NamedTuple):
    coef: int
    lit: Literal


def _check64(value: int, what: str) -> int:
    if not -INT64_MAX <= value <= INT64_MAX:
        raise CoefficientOverflow(f"{what} {value} exceeds the 64-bit range")
    return value


@dataclass(frozen=True)
class NormalizedConstraint:
    """``sum(a_i * l_i) >= degree`` with every ``a_i > 0`` and one term per variable."""

    terms: tuple[Term, ...]
    degree: int

    @property
    def coef_sum(self) -> int:
        return sum(t.coef for t in self.terms)

    @property
    def trivial(self) -> bool:
        return self.degree <= 0

    def lhs(self, assignment: Assignment) -> int:
        return sum(t.coef for t in self.terms if t.lit.value(assignment))

    def __str__(self) -> str:
        return _format_terms(self.terms) + f" >= {self.degree}"


@dataclass(frozen=True)
class Objective:
    terms: tuple[Term, ...] = ()

    @property
    def negative_offset(self) -> int:
        return sum(-t.coef for t in self.terms if t.coef < 0)

    def is_zero(self) -> bool:
        return not self.terms


@dataclass(frozen=True)
class PboInstance:
    num_vars: int
    constraints: tuple[NormalizedConstraint, ...]
    objective: Objective = Objective()
    variable_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.variable_names:
            names = tuple(f"x{i + 1}" for i in range(self.num_vars))
            object.__setattr__(self, "variable_names", names)
        if len(self.variable_names) != self.num_vars:
            raise ValueError("variable_names must have one entry per variable")

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def name_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.variable_names)}

    def is_feasible(self, assignment: Assignment) -> bool:
        if len(assignment) != self.num_vars:
            raise ValueError(
                f"assignment has {len(assignment)} values, expected {self.num_vars}"
            )
        return all(constraint_violation(c, assignment) == 0 for c in self.constraints)

    def total_violation(self, assignment: Assignment) -> int:
        return sum(constraint_violation(c, assignment) for c in self.constraints)

    def objective_value(self, assignment: Assignment) -> int:
        return objective_value(self.objective, assignment)


def constraint_violation(c: NormalizedConstraint, a: Assignment) -> int:
    return max(0, c.degree - c.lhs(a))


def objective_value(o: Objective, a: Assignment) -> int:
    # Coefficients are range-checked at construction, so the exact sum is safe
    # to report; anything larger than 64 bits is flagged for downstream tools.
    total = sum(t.coef for t in o.terms if t.lit.value(a))
    return _check64(total, "objective value")


def normalize(
    terms: Iterable[tuple[int, Literal]], op: str, rhs: int
) -> list[NormalizedConstraint]:
    """Rewrite ``sum(c_i * l_i) <op> rhs`` as one or two ``>=`` constraints.

    Negated literals and negative coefficients are eliminated through
    ``l = 1 - ~l``; ``=`` yields the ``>=`` half followed by the ``<=`` half.
    Results with degree <= 0 are returned too; check ``.trivial``.
    """
    # collapse everything onto positive literals: c*~x == c - c*x
    coefs: dict[int, int] = {}
    for c, lit in terms:
        c = int(c)
        if lit.positive:
            coefs[lit.var] = coefs.get(lit.var, 0) + c
        else:
            coefs[lit.var] = coefs.get(lit.var, 0) - c
            rhs -= c

    if op == ">=":
        halves = [(coefs, rhs)]
    elif op == ">":
        halves = [(coefs, rhs + 1)]
    elif op == "<=":
        halves = [({v: -c for v, c in coefs.items()}, -rhs)]
    elif op == "<":
        halves = [({v: -c for v, c in coefs.items()}, -rhs + 1)]
    elif op == "=":
        halves = [(coefs, rhs), ({v: -c for v, c in coefs.items()}, -rhs)]
    else:
        raise ValueError(f"unknown relational operator {op!r}")

    out = []
    for cmap, degree in halves:
        new_terms = []
        for var in sorted(cmap):
            c = cmap[var]
            if c > 0:
                new_terms.append(Term(c, Literal(var, True)))
            elif c < 0:
                # c*x == c + |c|*~x
                new_terms.append(Term(-c, Literal(var, False)))
                degree -= c
        for t in new_terms:
            _check64(t.coef, "coefficient")
        _check64(degree, "degree")
        _check64(sum(t.coef for t in new_terms), "coefficient sum")
        out.append(NormalizedConstraint(tuple(new_terms), degree))
    return out


# -- OPB text format ---------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\*[^\n]*)
  | (?P<objkw>(?:min|max):)
  | (?P<op>>=|<=|=|>|<)
  | (?P<int>[+-]\s*\d+|\d+)
  | (?P<lit>~?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<semi>;)
  | (?P<bad>.)
    """,
    re.VERBOSE,
)

_HEADER = re.compile(r"#variable=\s*(\d+)(?:\s+#constraint=\s*(\d+))?")


class _Tok(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> tuple[list[_Tok], int | None]:
    line, line_start = 1, 0
    header = None
    toks = []
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        col = m.start() - line_start + 1
        if kind == "ws":
            continue
        if kind == "nl":
            line += 1
            line_start = m.end()
            continue
        if kind == "comment":
            if header is None:
                h = _HEADER.search(m.group())
                if h:
                    header = int(h.group(1))
            continue
        if kind == "bad":
            raise OpbSyntaxError(f"unexpected character {m.group()!r}", line, col)
        toks.append(_Tok(kind, m.group(), line, col))
    toks.append(_Tok("eof", "", line, 1))
    return toks, header


class _Parser:
    def __init__(self, text: str):
        self._toks, self.header_vars = _tokenize(text)
        self._pos = 0
        self.names: dict[str, int] = {}
        self.max_index = -1

    def next(self) -> _Tok:
        tok = self._toks[self._pos]
        if self._pos < len(self._toks) - 1:
            self._pos += 1
        return tok

    def peek(self) -> _Tok:
        return self._toks[self._pos]

    def literal(self, tok: _Tok) -> Literal:
        name = tok.text
        positive = not name.startswith("~")
        name = name.lstrip("~")
        m = re.fullmatch(r"x(\d+)", name)
        if not m:
            raise OpbSyntaxError(f"bad variable name {name!r}", tok.line, tok.col)
        idx = int(m.group(1))
        if idx == 0:
            raise OpbSyntaxError("variable index 0 is not allowed", tok.line, tok.col)
        self.max_index = max(self.max_index, idx - 1)
        self._last_lit_tok = tok
        return Literal(idx - 1, positive)

    def terms(self) -> list[tuple[int, Literal, _Tok]]:
        out = []
        while self.peek().kind == "int":
            ctok = self.next()
            coef = int(ctok.text.replace(" ", "").replace("\t", ""))
            ltok = self.next()
            if ltok.kind != "lit":
                raise OpbSyntaxError("expected a literal after coefficient", ltok.line, ltok.col)
            lit = self.literal(ltok)
            if self.peek().kind == "lit":
                t = self.peek()
                raise OpbSyntaxError("nonlinear product terms are not supported", t.line, t.col)
            try:
                _check64(coef, "coefficient")
            except CoefficientOverflow as exc:
                raise CoefficientOverflow(f"line {ctok.line}, column {ctok.col}: {exc}") from None
            out.append((coef, lit, ltok))
        t = self.peek()
        if t.kind == "lit":
            raise OpbSyntaxError("term is missing its coefficient", t.line, t.col)
        return out

    def expect(self, kind: str) -> _Tok:
        tok = self.next()
        if tok.kind != kind:
            what = tok.text or "end of input"
            raise OpbSyntaxError(f"expected {kind!r}, found {what!r}", tok.line, tok.col)
        return tok


def parse_opb(text: str | bytes) -> PboInstance:
    """Parse the linear subset of the PB-competition OPB format."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    p = _Parser(text)
    objective_terms: list[tuple[int, Literal, _Tok]] | None = None
    raw: list[tuple[list, str, int]] = []

    while True:
        tok = p.peek()
        if tok.kind == "eof":
            p.next()
            break
        if tok.kind == "objkw":
            p.next()
            if tok.text == "max:":
                raise OpbSyntaxError("'max:' objectives are not supported", tok.line, tok.col)
            if objective_terms is not None or raw:
                raise OpbSyntaxError("objective must be the first statement", tok.line, tok.col)
            objective_terms = p.terms()
            p.expect("semi")
            continue
        terms = p.terms()
        op = p.expect("op")
        rhs_tok = p.expect("int")
        rhs = int(rhs_tok.text.replace(" ", "").replace("\t", ""))
        try:
            _check64(rhs, "right-hand side")
        except CoefficientOverflow as exc:
            raise CoefficientOverflow(f"line {rhs_tok.line}, column {rhs_tok.col}: {exc}") from None
        p.expect("semi")
        raw.append((terms, op.text, rhs, op))

    n = p.max_index + 1
    if p.header_vars is not None:
        if p.max_index >= p.header_vars:
            bad = p._last_lit_tok
            for group in [objective_terms or []] + [r[0] for r in raw]:
                for _, lit, ltok in group:
                    if lit.var >= p.header_vars:
                        bad = ltok
                        break
                else:
                    continue
                break
            raise OpbSyntaxError(
                f"variable index exceeds declared #variable= {p.header_vars}",
                bad.line,
                bad.col,
            )
        n = p.header_vars

    constraints = []
    for terms, op, rhs, optok in raw:
        try:
            parts = normalize([(c, lit) for c, lit, _ in terms], op, rhs)
        except CoefficientOverflow as exc:
            raise CoefficientOverflow(f"line {optok.line}: {exc}") from None
        constraints.extend(c for c in parts if not c.trivial)

    objective = Objective()
    if objective_terms:
        merged: dict[Literal, int] = {}
        for c, lit, _ in objective_terms:
            merged[lit] = merged.get(lit, 0) + c
        obj_terms = tuple(Term(c, lit) for lit, c in merged.items() if c != 0)
        objective = Objective(obj_terms)
        _check64(sum(abs(t.coef) for t in obj_terms), "objective coefficient sum")

    return PboInstance(n, tuple(constraints), objective)


def read_opb(path) -> PboInstance:
    with open(path, "rb") as fh:
        return parse_opb(fh.read())


def _format_lit(lit: Literal, names: Sequence[str] | None = None) -> str:
    name = names[lit.var] if names else f"x{lit.var + 1}"
    return name if lit.positive else "~" + name


def _format_terms(terms: Iterable[Term], names: Sequence[str] | None = None) -> str:
    return " ".join(f"{t.coef:+d} {_format_lit(t.lit, names)}" for t in terms)


def emit_opb(inst: PboInstance) -> str:
    """Write ``inst`` back as OPB text (``>=`` constraints only)."""
    names = inst.variable_names
    lines = [f"* #variable= {inst.num_vars} #constraint= {inst.num_constraints}"]
    if not inst.objective.is_zero():
        lines.append(f"min: {_format_terms(inst.objective.terms, names)} ;")
    for c in inst.constraints:
        lines.append(f"{_format_terms(c.terms, names)} >= {c.degree} ;")
    return "\n".join(lines) + "\n"
