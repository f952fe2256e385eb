"""Exact finite-valued Łukasiewicz logic.

Truth values live in S_n = {0, 1/n, ..., 1}.  They are stored as integer
numerators over a fixed resolution ``n`` so every connective stays exact.
Formulas are small immutable ASTs with an ASCII concrete syntax::

    formula := sum
    sum     := impl { "+" impl }
    impl    := prod [ "->" impl ]
    prod    := unary { "*" unary }
    unary   := "~" unary | "min(" formula "," formula ")"
             | "max(" formula "," formula ")" | "0" | "1" | IDENT | "(" formula ")"

``+`` is strong disjunction, ``*`` fusion, ``->`` the residuum and ``~``
negation.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np


class LogicError(ValueError):
    pass


class ResolutionMismatch(LogicError):
    """Two truth values with different resolutions were combined."""


class FormulaSyntaxError(LogicError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class MissingVariable(LogicError):
    pass


class ShapeMismatch(LogicError):
    pass


# ---------------------------------------------------------------------------
# truth values


@dataclass(frozen=True)
class TruthValue:
    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator < 1:
            raise LogicError(f"resolution must be >= 1, got {self.denominator}")
        if not 0 <= self.numerator <= self.denominator:
            raise LogicError(f"{self.numerator}/{self.denominator} is outside [0, 1]")

    @classmethod
    def of(cls, value, n: int) -> "TruthValue":
        """The member of S_n equal to ``value`` (a number or ``k/n`` string)."""
        frac = Fraction(value) if not isinstance(value, str) else parse_fraction(value)
        k = frac * n
        if k.denominator != 1:
            raise LogicError(f"{value} is not a member of S_{n}")
        return cls(int(k), n)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        return self.numerator / self.denominator

    def __str__(self) -> str:
        if self.numerator in (0, self.denominator):
            return str(self.numerator // self.denominator)
        f = self.fraction
        return f"{f.numerator}/{f.denominator}"

    def _check(self, other: "TruthValue"):
        if self.denominator != other.denominator:
            raise ResolutionMismatch(
                f"cannot combine S_{self.denominator} with S_{other.denominator}")

    def __lt__(self, other: "TruthValue") -> bool:
        self._check(other)
        return self.numerator < other.numerator

    def __le__(self, other: "TruthValue") -> bool:
        self._check(other)
        return self.numerator <= other.numerator

    def __gt__(self, other: "TruthValue") -> bool:
        return other < self

    def __ge__(self, other: "TruthValue") -> bool:
        return other <= self


def parse_fraction(text: str) -> Fraction:
    """Read ``k/n`` or a decimal literal."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise LogicError(f"not a truth value: {text!r}") from None


def parse_truth(text: str, n: int) -> TruthValue:
    return TruthValue.of(parse_fraction(text), n)


def fusion(x: TruthValue, y: TruthValue) -> TruthValue:
    x._check(y)
    return TruthValue(max(0, x.numerator + y.numerator - x.denominator), x.denominator)


def residuum(x: TruthValue, y: TruthValue) -> TruthValue:
    x._check(y)
    return TruthValue(min(x.denominator, x.denominator - x.numerator + y.numerator), x.denominator)


def strong_sum(x: TruthValue, y: TruthValue) -> TruthValue:
    x._check(y)
    return TruthValue(min(x.denominator, x.numerator + y.numerator), x.denominator)


def negation(x: TruthValue) -> TruthValue:
    return TruthValue(x.denominator - x.numerator, x.denominator)


def meet(x: TruthValue, y: TruthValue) -> TruthValue:
    x._check(y)
    return TruthValue(min(x.numerator, y.numerator), x.denominator)


def join(x: TruthValue, y: TruthValue) -> TruthValue:
    x._check(y)
    return TruthValue(max(x.numerator, y.numerator), x.denominator)


def biconditional(x: TruthValue, y: TruthValue) -> TruthValue:
    x._check(y)
    return TruthValue(x.denominator - abs(x.numerator - y.numerator), x.denominator)


# Fraction-valued counterparts, used by the relation algebra where values of
# mixed provenance meet.  S_n is closed under all of them.

def t_fusion(x: Fraction, y: Fraction) -> Fraction:
    return max(Fraction(0), x + y - 1)


def t_sum(x: Fraction, y: Fraction) -> Fraction:
    return min(Fraction(1), x + y)


def t_implies(x: Fraction, y: Fraction) -> Fraction:
    return min(Fraction(1), 1 - x + y)


def t_neg(x: Fraction) -> Fraction:
    return 1 - x


def t_bicond(x: Fraction, y: Fraction) -> Fraction:
    return 1 - abs(x - y)


def fuse_all(values: Iterable[Fraction]) -> Fraction:
    """⊗-fold; the empty fold is 1."""
    acc = Fraction(1)
    for v in values:
        acc = max(Fraction(0), acc + v - 1)
        if acc == 0:
            break
    return acc


def sum_all(values: Iterable[Fraction]) -> Fraction:
    """⊕-fold; the empty fold is 0."""
    acc = Fraction(0)
    for v in values:
        acc = min(Fraction(1), acc + v)
        if acc == 1:
            break
    return acc


# ---------------------------------------------------------------------------
# formulas


class Formula:
    """Base class of the formula AST."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def variables(self) -> list[str]:
        """Distinct variable names in first-occurrence order."""
        seen: dict[str, None] = {}
        for node in self.walk():
            if isinstance(node, Var):
                seen.setdefault(node.name, None)
        return list(seen)

    def walk(self) -> Iterator["Formula"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children()))

    def connectives(self) -> int:
        return sum(1 for node in self.walk() if not isinstance(node, (Var, Zero, One)))

    def height(self) -> int:
        """Parse-tree height counted in levels; a leaf has height 1."""
        kids = self.children()
        return 1 + (max(k.height() for k in kids) if kids else 0)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Zero(Formula):
    pass


@dataclass(frozen=True)
class One(Formula):
    pass


@dataclass(frozen=True)
class Neg(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class _Binary(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


class Fusion(_Binary):
    pass


class StrongSum(_Binary):
    pass


class Implies(_Binary):
    pass


class Meet(_Binary):
    pass


class Join(_Binary):
    pass


def conjoin(parts: Sequence[Formula]) -> Formula:
    """Left-nested fusion of ``parts``; 1 for an empty list."""
    if not parts:
        return One()
    acc = parts[0]
    for p in parts[1:]:
        acc = Fusion(acc, p)
    return acc


def disjoin(parts: Sequence[Formula]) -> Formula:
    if not parts:
        return Zero()
    acc = parts[0]
    for p in parts[1:]:
        acc = StrongSum(acc, p)
    return acc


def substitute(f: Formula, mapping: Mapping[str, Formula]) -> Formula:
    if isinstance(f, Var):
        return mapping.get(f.name, f)
    if isinstance(f, Neg):
        return Neg(substitute(f.child, mapping))
    if isinstance(f, _Binary):
        return type(f)(substitute(f.left, mapping), substitute(f.right, mapping))
    return f


# printing ------------------------------------------------------------------

_SUM, _IMPL, _PROD, _UNARY = 1, 2, 3, 4


def to_text(f: Formula) -> str:
    return _render(f, _SUM)


def _render(f: Formula, ctx: int) -> str:
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Zero):
        return "0"
    if isinstance(f, One):
        return "1"
    if isinstance(f, Neg):
        return "~" + _render(f.child, _UNARY)
    if isinstance(f, Meet):
        return f"min({to_text(f.left)}, {to_text(f.right)})"
    if isinstance(f, Join):
        return f"max({to_text(f.left)}, {to_text(f.right)})"
    if isinstance(f, StrongSum):
        # implications inside sums are parenthesised for readability
        left_ctx = _SUM if isinstance(f.left, StrongSum) else _PROD
        text, level = f"{_render(f.left, left_ctx)} + {_render(f.right, _PROD)}", _SUM
    elif isinstance(f, Implies):
        text, level = f"{_render(f.left, _PROD)} -> {_render(f.right, _IMPL)}", _IMPL
    elif isinstance(f, Fusion):
        text, level = f"{_render(f.left, _PROD)} * {_render(f.right, _UNARY)}", _PROD
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({text})" if level < ctx else text


# parsing -------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->|=>|[+*~(),01⊕⊗¬⇒])|([A-Za-z_][A-Za-z0-9_']*))")
_ALIASES = {"⊕": "+", "⊗": "*", "¬": "~", "⇒": "->", "=>": "->"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unknown token {text[start]!r}", start)
        start = m.start(1) if m.group(1) else m.start(2)
        if m.group(1):
            tokens.append(("op", _ALIASES.get(m.group(1), m.group(1)), start))
        else:
            tokens.append(("ident", m.group(2), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, value: str | None = None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            found = tok[1] or "end of input"
            raise FormulaSyntaxError(f"expected {value!r}, found {found!r}", tok[2])
        self.i += 1
        return tok

    def formula(self) -> Formula:
        node = self.impl()
        while self.peek()[1] == "+":
            self.take()
            node = StrongSum(node, self.impl())
        return node

    def impl(self) -> Formula:
        node = self.prod()
        if self.peek()[1] == "->":
            self.take()
            return Implies(node, self.impl())
        return node

    def prod(self) -> Formula:
        node = self.unary()
        while self.peek()[1] == "*":
            self.take()
            node = Fusion(node, self.unary())
        return node

    def unary(self) -> Formula:
        kind, value, pos = self.peek()
        if value == "~":
            self.take()
            return Neg(self.unary())
        if value == "(":
            self.take()
            node = self.formula()
            self.take(")")
            return node
        if value == "0" and kind == "op":
            self.take()
            return Zero()
        if value == "1" and kind == "op":
            self.take()
            return One()
        if kind == "ident":
            self.take()
            if value in ("min", "max") and self.peek()[1] == "(":
                self.take("(")
                left = self.formula()
                self.take(",")
                right = self.formula()
                self.take(")")
                return Meet(left, right) if value == "min" else Join(left, right)
            return Var(value)
        raise FormulaSyntaxError(f"unexpected {value or 'end of input'!r}", pos)


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    node = p.formula()
    kind, value, pos = p.peek()
    if kind != "end":
        raise FormulaSyntaxError(f"unexpected {value!r}", pos)
    return node


# evaluation ----------------------------------------------------------------


def eval_formula(f: Formula, assignment: Mapping[str, TruthValue]) -> TruthValue:
    if not assignment:
        n = 1
    else:
        resolutions = {v.denominator for v in assignment.values()}
        if len(resolutions) > 1:
            raise ResolutionMismatch(f"mixed resolutions {sorted(resolutions)}")
        n = resolutions.pop()
    env = {}
    for name in f.variables():
        if name not in assignment:
            raise MissingVariable(f"no value for variable {name!r}")
        env[name] = np.array([assignment[name].numerator])
    return TruthValue(int(eval_numerators(f, env, n)[0]), n)


def eval_numerators(f: Formula, env: Mapping[str, np.ndarray], n: int) -> np.ndarray:
    """Vectorised exact evaluation on integer numerators over resolution ``n``."""
    size = len(next(iter(env.values()))) if env else 1

    def go(node: Formula) -> np.ndarray:
        if isinstance(node, Var):
            try:
                return np.asarray(env[node.name], dtype=np.int64)
            except KeyError:
                raise MissingVariable(f"no value for variable {node.name!r}") from None
        if isinstance(node, Zero):
            return np.zeros(size, dtype=np.int64)
        if isinstance(node, One):
            return np.full(size, n, dtype=np.int64)
        if isinstance(node, Neg):
            return n - go(node.child)
        a, b = go(node.left), go(node.right)
        if isinstance(node, Fusion):
            return np.maximum(0, a + b - n)
        if isinstance(node, StrongSum):
            return np.minimum(n, a + b)
        if isinstance(node, Implies):
            return np.minimum(n, n - a + b)
        if isinstance(node, Meet):
            return np.minimum(a, b)
        if isinstance(node, Join):
            return np.maximum(a, b)
        raise TypeError(f"not a formula: {node!r}")

    return go(f)


def eval_real(f: Formula, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluation on real values in [0, 1] (no exactness guarantee)."""
    size = len(next(iter(env.values()))) if env else 1

    def go(node: Formula) -> np.ndarray:
        if isinstance(node, Var):
            return np.asarray(env[node.name], dtype=float)
        if isinstance(node, Zero):
            return np.zeros(size)
        if isinstance(node, One):
            return np.ones(size)
        if isinstance(node, Neg):
            return 1.0 - go(node.child)
        a, b = go(node.left), go(node.right)
        if isinstance(node, Fusion):
            return np.maximum(0.0, a + b - 1.0)
        if isinstance(node, StrongSum):
            return np.minimum(1.0, a + b)
        if isinstance(node, Implies):
            return np.minimum(1.0, 1.0 - a + b)
        if isinstance(node, Meet):
            return np.minimum(a, b)
        return np.maximum(a, b)

    return go(f)


# truth tables --------------------------------------------------------------


def grid(m: int, n: int) -> np.ndarray:
    """All points of (S_n)^m as numerators, row-major with the first axis slowest."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    axes = np.indices((n + 1,) * m, dtype=np.int64)
    return axes.reshape(m, -1).T.copy()


@dataclass(frozen=True, eq=False)
class TruthTable:
    variables: tuple[str, ...]
    n: int
    numerators: np.ndarray

    def __post_init__(self):
        expected = (self.n + 1) ** len(self.variables)
        if len(self.numerators) != expected:
            raise ShapeMismatch(f"table needs {expected} entries, got {len(self.numerators)}")

    @property
    def entries(self) -> list[TruthValue]:
        return [TruthValue(int(k), self.n) for k in self.numerators]

    @property
    def values(self) -> np.ndarray:
        return self.numerators / self.n

    def __len__(self):
        return len(self.numerators)

    def __eq__(self, other):
        if not isinstance(other, TruthTable):
            return NotImplemented
        return (self.variables == other.variables and self.n == other.n
                and np.array_equal(self.numerators, other.numerators))


def truth_subtable(f: Formula, n: int, variables: Sequence[str] | None = None) -> TruthTable:
    if n < 1:
        raise LogicError("resolution must be >= 1")
    names = tuple(variables) if variables is not None else tuple(f.variables())
    missing = set(f.variables()) - set(names)
    if missing:
        raise MissingVariable(f"variables {sorted(missing)} not in table axes")
    pts = grid(len(names), n)
    env = {name: pts[:, i] for i, name in enumerate(names)}
    out = eval_numerators(f, env, n)
    if out.shape != (len(pts),):
        out = np.broadcast_to(out, (len(pts),)).copy()
    return TruthTable(names, n, out)


# similarity ----------------------------------------------------------------


def _distances(a, b, weights=None) -> tuple[np.ndarray, np.ndarray | None]:
    if isinstance(a, TruthTable) and isinstance(b, TruthTable):
        if a.variables != b.variables or a.n != b.n:
            raise ShapeMismatch("tables differ in variables or resolution")
        return np.abs(a.numerators - b.numerators) / a.n, weights
    va = a.values if isinstance(a, TruthTable) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, TruthTable) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise ShapeMismatch(f"shapes {va.shape} and {vb.shape} differ")
    return np.abs(va - vb).ravel(), weights


def exp_similarity(a, b, weights=None) -> float:
    """e^(-mean |a-b|); ``weights`` are optional row multiplicities."""
    d, w = _distances(a, b, weights)
    if d.size == 0:
        return 1.0
    mean = float(np.average(d, weights=w)) if w is not None else float(d.mean())
    return math.exp(-mean)


SIMILARITY_MODES = ("exp", "inf", "and")


def similarity(a, b, mode: str = "exp", weights=None) -> float:
    if mode == "exp":
        return exp_similarity(a, b, weights)
    d, w = _distances(a, b, weights)
    if mode == "inf":
        return float(1.0 - d.max()) if d.size else 1.0
    if mode == "and":
        total = float((d * w).sum()) if w is not None else float(d.sum())
        return max(0.0, 1.0 - total)
    raise ValueError(f"unknown similarity mode {mode!r}")
