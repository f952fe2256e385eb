"""Relational specifications: parsing, printing, model checking and enrichment.

Concrete grammar (``%`` and ``#`` start comments)::

    I : { 0, 1 };                     sort with listed values
    A, B : I, I, I;                   product sorts
    R : { A -> F };                   view (relation sign)
    G : { A -> E;  clauses };         view with clauses
    Gamma : { A; Gamma : similarity; };   relation over one sort
    [D] ;   [D]_0.9 ;                 commutativity marks

Clauses inside a view body::

    D : R * G * P ;                   diagram gluing
    G : [D]_0.9 ;                     commutativity mark
    G : lim D ;   G : 0.9-lim D ;     limit marks (likewise colim)
    G : is_a(Gamma) ;   Gamma : similarity ;
    G(x, y) : out = x * ~y @ 0.95 ;   formula constraint (output and λ optional)
    X : { ... } ;                     nested declaration

A model binds every sign to a dataset (keys = input sort values, output
columns = output sort values), a sparse relation table, or ``identity``.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .dataset import Dataset, read_dataset
from .logic import Formula, eval_numerators, exp_similarity, parse_formula, parse_fraction, to_text
from .relations import (FiniteView, MultiDiagram, OmegaSet, coequalize, is_a_check, is_similarity,
                        lambda_commutative, lambda_limit_check, limit, view_similarity)

log = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"


class SpecError(ValueError):
    pass


class SpecSyntaxError(SpecError):
    pass


class UnboundSign(SpecError):
    pass


class ArityMismatch(SpecError):
    pass


# ---------------------------------------------------------------------------
# structure


@dataclass(frozen=True)
class SortDecl:
    name: str
    values: tuple[str, ...] | None = None
    product: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ViewDecl:
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...] = ()
    arrow: bool = True
    body: tuple = ()


@dataclass(frozen=True)
class Gluing:
    name: str
    parts: tuple[str, ...]


@dataclass(frozen=True)
class Commutative:
    diagram: str
    lam: float = 1.0
    owner: str | None = None


@dataclass(frozen=True)
class Lim:
    sign: str
    diagram: str
    lam: float = 1.0


@dataclass(frozen=True)
class Colim:
    sign: str
    diagram: str
    lam: float = 1.0


@dataclass(frozen=True)
class IsA:
    sign: str
    gamma: str


@dataclass(frozen=True)
class Similarity:
    sign: str


@dataclass(frozen=True)
class FormulaConstraint:
    sign: str
    args: tuple[str, ...]
    formula: str  # canonical text
    output: str | None = None
    lam: float = 1.0

    @property
    def parsed(self) -> Formula:
        return parse_formula(self.formula)


Mark = Union[Commutative, Lim, Colim, IsA, Similarity, FormulaConstraint]
MARK_TYPES = (Commutative, Lim, Colim, IsA, Similarity, FormulaConstraint)


def _walk(items):
    for item in items:
        yield item
        if isinstance(item, ViewDecl):
            yield from _walk(item.body)


@dataclass(frozen=True)
class Specification:
    items: tuple = ()

    @property
    def sorts(self) -> dict[str, SortDecl]:
        return {i.name: i for i in _walk(self.items) if isinstance(i, SortDecl)}

    @property
    def views(self) -> dict[str, ViewDecl]:
        return {i.name: i for i in _walk(self.items) if isinstance(i, ViewDecl)}

    @property
    def diagrams(self) -> dict[str, Gluing]:
        return {i.name: i for i in _walk(self.items) if isinstance(i, Gluing)}

    @property
    def marks(self) -> list:
        return [i for i in _walk(self.items) if isinstance(i, MARK_TYPES)]

    def to_text(self) -> str:
        return "".join(line + "\n" for line in _print_items(self.items, 0))

    def arity(self, sign: str) -> int | None:
        """Number of arguments of the input side: product components or listed values."""
        total = 0
        for s in self.views[sign].inputs:
            decl = self.sorts[s]
            if decl.product is not None:
                total += len(decl.product)
            else:
                total += len(decl.values)
        return total


# ---------------------------------------------------------------------------
# printing


def _lam(lam: float) -> str:
    return repr(float(lam))


def _print_items(items, depth: int) -> list[str]:
    pad = "  " * depth
    out = []
    for item in items:
        if isinstance(item, SortDecl):
            if item.values is not None:
                out.append(f"{pad}{item.name} : {{ {', '.join(item.values)} }};")
            else:
                out.append(f"{pad}{item.name} : {', '.join(item.product)};")
        elif isinstance(item, ViewDecl):
            head = ", ".join(item.inputs)
            if item.arrow:
                head += " -> " + ", ".join(item.outputs)
            if not item.body:
                out.append(f"{pad}{item.name} : {{ {head}{'' if item.arrow else ';'} }};")
            else:
                out.append(f"{pad}{item.name} : {{ {head};")
                out.extend(_print_items(item.body, depth + 1))
                out.append(f"{pad}}};")
        elif isinstance(item, Gluing):
            out.append(f"{pad}{item.name} : {' * '.join(item.parts)};")
        elif isinstance(item, Commutative):
            tag = f"[{item.diagram}]" + ("" if item.lam == 1 else f"_{_lam(item.lam)}")
            out.append(f"{pad}{item.owner} : {tag};" if item.owner else f"{pad}{tag};")
        elif isinstance(item, (Lim, Colim)):
            word = "lim" if isinstance(item, Lim) else "colim"
            pre = "" if item.lam == 1 else f"{_lam(item.lam)}-"
            out.append(f"{pad}{item.sign} : {pre}{word} {item.diagram};")
        elif isinstance(item, IsA):
            out.append(f"{pad}{item.sign} : is_a({item.gamma});")
        elif isinstance(item, Similarity):
            out.append(f"{pad}{item.sign} : similarity;")
        elif isinstance(item, FormulaConstraint):
            rhs = (f"{item.output} = " if item.output else "") + item.formula
            if item.lam != 1:
                rhs += f" @ {_lam(item.lam)}"
            out.append(f"{pad}{item.sign}({', '.join(item.args)}) : {rhs};")
    return out


# ---------------------------------------------------------------------------
# parsing


_TOKEN = re.compile(r"""
    (?P<lam>\]_\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)
  | (?P<arrow>->|⇀)
  | (?P<assign>:=)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)
  | (?P<ident>[^\W\d][\w']*)
  | (?P<punct>[{}();:,*\[\]=@⊗-])
""", re.VERBOSE)

_COMMENT = re.compile(r"[%#][^\n]*")
_OUTPUT = re.compile(r"\s*([^\W\d][\w']*)\s*=(?!>)")


class _Parser:
    def __init__(self, text: str):
        # comments are blanked in place so positions stay valid
        self.text = _COMMENT.sub(lambda m: " " * len(m.group()), text)
        self.pos = 0
        self.declared: dict[str, str] = {}  # name -> "sort" | "view"
        self.diagrams: set[str] = set()

    # -- lexing --------------------------------------------------------------

    def _where(self, pos: int) -> str:
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return f"line {line}, column {col}"

    def error(self, msg: str, pos: int | None = None):
        raise SpecSyntaxError(f"{self._where(self.pos if pos is None else pos)}: {msg}")

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self._skip()
        if self.pos >= len(self.text):
            return ("eof", "", self.pos)
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            self.error(f"unexpected character {self.text[self.pos]!r}")
        kind = m.lastgroup
        value = m.group()
        if kind == "punct" or kind in ("arrow", "assign"):
            kind = {"arrow": "->", "assign": ":", "punct": value}[kind]
            if kind == "⊗":
                kind = "*"
        return (kind, value, self.pos)

    def next(self):
        tok = self.peek()
        if tok[0] != "eof":
            self.pos = tok[2] + len(tok[1])
        return tok

    def expect(self, kind: str, what: str | None = None):
        tok = self.next()
        if tok[0] != kind:
            self.error(f"expected {what or repr(kind)}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def ident(self, what="a name") -> str:
        return self.expect("ident", what)[1]

    def number(self) -> float:
        tok = self.expect("num", "a number")
        value = float(parse_fraction(tok[1]))
        if not 0 < value <= 1:
            self.error(f"λ must lie in (0, 1], got {tok[1]}", tok[2])
        return value

    # -- names -----------------------------------------------------------------

    def declare(self, name: str, kind: str, pos: int):
        if name in self.declared:
            self.error(f"{name!r} is already declared", pos)
        self.declared[name] = kind

    def need(self, name: str, kind: str, pos: int):
        if name not in self.declared:
            self.error(f"{name!r} is used before it is declared", pos)
        if self.declared[name] != kind:
            self.error(f"{name!r} is a {self.declared[name]}, expected a {kind}", pos)

    def need_diagram(self, name: str, pos: int):
        if name not in self.diagrams:
            self.error(f"{name!r} is not a declared diagram", pos)

    # -- grammar ---------------------------------------------------------------

    def parse(self) -> Specification:
        items = []
        while self.peek()[0] != "eof":
            items.extend(self.statement(top=True))
        return Specification(tuple(items))

    def name_list(self, kind="ident") -> list[tuple[str, int]]:
        out = [(self.ident(), self.peek()[2])]
        while self.peek()[0] == ",":
            self.next()
            tok = self.expect("ident", "a name")
            out.append((tok[1], tok[2]))
        return out

    def statement(self, top: bool, owner: str | None = None) -> list:
        kind, value, pos = self.peek()
        if kind == "[" or kind == "lam":
            mark = self.commutative(None)
            self.expect(";")
            return [mark]
        if kind != "ident":
            self.error(f"expected a declaration, found {value!r}")
        name_pos = pos
        self.next()
        if self.peek()[0] == "(":
            return [self.constraint(value, name_pos)]
        names = [(value, name_pos)]
        while self.peek()[0] == ",":
            self.next()
            tok = self.expect("ident", "a name")
            names.append((tok[1], tok[2]))
        self.expect(":")
        tok = self.peek()
        if tok[0] == "{":
            return self.declaration(names)
        if len(names) == 1:
            item = self.clause(names[0][0], names[0][1])
            if item is not None:
                return [item]
        return self.product_sort(names)

    def product_sort(self, names) -> list:
        parts = []
        for s, pos in self.name_list():
            self.need(s, "sort", pos)
            parts.append(s)
        self.expect(";")
        out = []
        for n, pos in names:
            self.declare(n, "sort", pos)
            out.append(SortDecl(n, product=tuple(parts)))
        return out

    def declaration(self, names) -> list:
        self.expect("{")
        start = self.pos
        first = self.peek()
        atoms = []
        if first[0] != "}":
            while True:
                tok = self.next()
                if tok[0] not in ("ident", "num"):
                    self.error(f"expected a name, found {tok[1]!r}", tok[2])
                atoms.append((tok[1], tok[2]))
                if self.peek()[0] != ",":
                    break
                self.next()
        nxt = self.peek()[0]
        if nxt == "}" and atoms:
            self.next()
            self.expect(";")
            values = tuple(a for a, _ in atoms)
            if len(set(values)) != len(values):
                self.error("repeated sort value", start)
            out = []
            for n, pos in names:
                self.declare(n, "sort", pos)
                out.append(SortDecl(n, values=values))
            return out
        inputs = atoms
        outputs = []
        arrow = False
        if nxt == "->":
            self.next()
            arrow = True
            outputs = [(s, p) for s, p in self.name_list()]
        for s, pos in inputs + outputs:
            self.need(s, "sort", pos)
        body_start = self.pos
        tok = self.next()
        if tok[0] == "}":
            if not arrow:
                self.error("a relation without '->' needs ';' after its sorts", tok[2])
            self.expect(";")
            body_items = []
        elif tok[0] == ";":
            for n, pos in names:
                self.declare(n, "view", pos)
            body_items = []
            while self.peek()[0] != "}":
                if self.peek()[0] == "eof":
                    self.error("unterminated declaration", body_start)
                body_items.extend(self.statement(top=False, owner=names[0][0]))
            self.next()
            self.expect(";")
            return [ViewDecl(n, tuple(s for s, _ in inputs), tuple(s for s, _ in outputs), arrow,
                             tuple(body_items)) for n, _ in names]
        else:
            self.error(f"expected ';' or '}}', found {tok[1]!r}", tok[2])
        out = []
        for n, pos in names:
            self.declare(n, "view", pos)
            out.append(ViewDecl(n, tuple(s for s, _ in inputs), tuple(s for s, _ in outputs),
                                arrow, ()))
        return out

    def clause(self, name: str, pos: int):
        kind, value, tpos = self.peek()
        if kind in ("[", "lam"):
            self.need(name, "view", pos)
            mark = self.commutative(name)
            self.expect(";")
            return mark
        if kind == "ident" and value == "is_a":
            self.next()
            self.need(name, "view", pos)
            self.expect("(")
            gpos = self.peek()[2]
            gamma = self.ident("a similarity sign")
            self.need(gamma, "view", gpos)
            self.expect(")")
            self.expect(";")
            return IsA(name, gamma)
        if kind == "ident" and value == "similarity":
            self.next()
            self.need(name, "view", pos)
            self.expect(";")
            return Similarity(name)
        if kind == "num" or (kind == "ident" and value in ("lim", "colim")):
            lam = 1.0
            if kind == "num":
                lam = self.number()
                self.expect("-")
            word = self.ident("'lim' or 'colim'")
            if word not in ("lim", "colim"):
                self.error(f"expected 'lim' or 'colim', found {word!r}")
            self.need(name, "view", pos)
            dpos = self.peek()[2]
            diagram = self.ident("a diagram name")
            self.need_diagram(diagram, dpos)
            self.expect(";")
            return (Lim if word == "lim" else Colim)(name, diagram, lam)
        if kind == "ident" and self.declared.get(value) == "view":
            self.need(name, "view", pos)
            parts = []
            while True:
                ppos = self.peek()[2]
                part = self.ident("a view name")
                self.need(part, "view", ppos)
                parts.append(part)
                if self.peek()[0] != "*":
                    break
                self.next()
            self.expect(";")
            self.diagrams.add(name)
            return Gluing(name, tuple(parts))
        return None

    def commutative(self, owner):
        tok = self.next()
        if tok[0] != "[":
            self.error("expected '['", tok[2])
        dpos = self.peek()[2]
        diagram = self.ident("a diagram name")
        self.need_diagram(diagram, dpos)
        close = self.next()
        if close[0] == "lam":
            lam = float(parse_fraction(close[1][2:]))
            if not 0 < lam <= 1:
                self.error("λ must lie in (0, 1]", close[2])
        elif close[0] == "]":
            lam = 1.0
        else:
            self.error("expected ']'", close[2])
        return Commutative(diagram, lam, owner)

    def constraint(self, sign: str, pos: int) -> FormulaConstraint:
        self.need(sign, "view", pos)
        self.expect("(")
        args = []
        if self.peek()[0] != ")":
            args = [a for a, _ in self.name_list()]
        self.expect(")")
        self.expect(":")
        self._skip()
        end = self.text.find(";", self.pos)
        if end < 0:
            self.error("formula constraint must end with ';'")
        raw = self.text[self.pos:end]
        start = self.pos
        self.pos = end + 1
        lam = 1.0
        if "@" in raw:
            raw, lam_text = raw.rsplit("@", 1)
            try:
                lam = float(parse_fraction(lam_text))
            except ValueError:
                self.error(f"bad λ {lam_text.strip()!r}", start)
            if not 0 < lam <= 1:
                self.error("λ must lie in (0, 1]", start)
        output = None
        m = _OUTPUT.match(raw)
        if m:
            output, raw = m.group(1), raw[m.end():]
        try:
            f = parse_formula(raw)
        except ValueError as err:
            self.error(f"bad formula: {err}", start)
        unknown = [v for v in f.variables() if v not in args]
        if unknown:
            self.error(f"formula uses {unknown} outside the argument list", start)
        return FormulaConstraint(sign, tuple(args), to_text(f), output, lam)


def parse_spec(text: str) -> Specification:
    return _Parser(text).parse()


def load_spec(path: str | Path) -> Specification:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def bundled_spec(name: str = "automata") -> Specification:
    return load_spec(DATA_DIR / f"{name}.lspec")


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class Identity:
    """Binding for the crisp identity (diagonal) relation."""


IDENTITY = Identity()
Binding = Union[Dataset, FiniteView, Identity]


def read_relation(path: str | Path) -> list[tuple[tuple[str, ...], Fraction]] | tuple:
    """Sparse relation table: header = attribute names then ``value``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows or rows[0][-1].strip() != "value":
        raise SpecError(f"{path}: relation tables need a final 'value' column")
    header = [h.strip() for h in rows[0][:-1]]
    entries = []
    for lineno, rec in enumerate(rows[1:], 2):
        if len(rec) != len(header) + 1:
            raise SpecError(f"{path}: row {lineno} has {len(rec)} fields")
        entries.append((tuple(x.strip() for x in rec[:-1]), parse_fraction(rec[-1])))
    return header, entries


@dataclass
class RelationTable:
    attributes: list[str]
    entries: list[tuple[tuple[str, ...], Fraction]]


def write_relation(view: FiniteView, path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(view.names) + ["value"])
        for key in sorted(view.entries, key=lambda k: tuple(map(str, k))):
            v = view.entries[key]
            w.writerow([*key, str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"])


def load_model(manifest: str | Path) -> dict[str, object]:
    """Manifest lines ``sign = path`` (``.csv`` dataset or ``.rel`` table) or ``sign = identity``."""
    manifest = Path(manifest)
    model: dict[str, object] = {}
    for lineno, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"{manifest}:{lineno}: expected 'sign = path'")
        sign, target = (s.strip() for s in line.split("=", 1))
        if target == "identity":
            model[sign] = IDENTITY
            continue
        path = (manifest.parent / target)
        if not path.exists():
            raise FileNotFoundError(f"{manifest}:{lineno}: {path} does not exist")
        if path.suffix == ".rel":
            model[sign] = RelationTable(*read_relation(path))
        else:
            model[sign] = read_dataset(path)
    return model


def write_model(model: Mapping[str, object], directory: str | Path) -> Path:
    """Write datasets (shared objects once) and a ``model.txt`` manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: dict[int, str] = {}
    lines = []
    for sign, b in model.items():
        if isinstance(b, Identity):
            lines.append(f"{sign} = identity")
            continue
        if id(b) not in written:
            stem = re.sub(r"[^\w]", "_", sign)
            if isinstance(b, Dataset):
                name = f"{stem}.csv"
                b.write(directory / name)
            elif isinstance(b, FiniteView):
                name = f"{stem}.rel"
                write_relation(b, directory / name)
            else:
                raise SpecError(f"cannot write binding of type {type(b).__name__}")
            written[id(b)] = name
        lines.append(f"{sign} = {written[id(b)]}")
    path = directory / "model.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# checking


@dataclass
class MarkResult:
    mark: str
    kind: str
    lam: float
    value: float | None
    status: str  # pass | fail | unsupported | skipped
    detail: str = ""


@dataclass
class CheckReport:
    results: list[MarkResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.results)

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            value = "-" if r.value is None else f"{r.value:.4f}"
            line = f"{r.status.upper():<11} {r.mark:<40} value {value:<8} lambda {r.lam:g}"
            lines.append(line + (f"  ({r.detail})" if r.detail else ""))
        lines.append(f"overall: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"passed": self.passed, "marks": [dataclasses.asdict(r) for r in self.results]}


def _mark_text(mark) -> str:
    return _print_items([dataclasses.replace(mark, owner=None)
                         if isinstance(mark, Commutative) else mark], 0)[0].rstrip(";")


class _Model:
    def __init__(self, spec: Specification, model: Mapping[str, object]):
        self.spec = spec
        self.model = dict(model)
        self._supports: dict[str, tuple] = {}
        self._views: dict[str, FiniteView] = {}

    def binding(self, sign: str):
        if sign not in self.model:
            raise UnboundSign(f"sign {sign!r} is not bound in the model")
        return self.model[sign]

    def support(self, sort: str) -> tuple:
        if sort in self._supports:
            return self._supports[sort]
        decl = self.spec.sorts.get(sort)
        if decl is None:
            raise SpecError(f"unknown sort {sort!r}")
        if decl.values is not None:
            sup = tuple(decl.values)
        else:
            found = set()
            for sign, view in self.spec.views.items():
                b = self.model.get(sign)
                if isinstance(b, Dataset) and view.inputs[:1] == (sort,):
                    found.update(b.keys)
                elif isinstance(b, RelationTable) and sort in b.attributes:
                    i = b.attributes.index(sort)
                    found.update(k[i] for k, _ in b.entries)
            if not found:
                raise SpecError(f"no binding determines the values of sort {sort!r}")
            sup = tuple(sorted(found))
        self._supports[sort] = sup
        return sup

    def _attributes(self, decl: ViewDecl):
        ins = list(decl.inputs)
        outs = list(decl.outputs) if decl.arrow else [s + "'" for s in decl.inputs]
        names = ins + outs
        if len(set(names)) != len(names):
            # endo-views such as E -> E keep the output copy apart
            outs = [s + "'" for s in outs]
        sorts = list(decl.inputs) + (list(decl.outputs) if decl.arrow else list(decl.inputs))
        return ins, outs, sorts

    def view(self, sign: str) -> FiniteView:
        if sign in self._views:
            return self._views[sign]
        decl = self.spec.views[sign]
        b = self.binding(sign)
        ins, outs, sorts = self._attributes(decl)
        names = ins + outs
        doms = [self.support(s) for s in sorts]
        if isinstance(b, Identity):
            if len(names) != 2:
                raise ArityMismatch(f"identity binding for {sign!r} needs one input and one output")
            common = set(doms[1])
            entries = {(x, x): 1 for x in doms[0] if x in common}
        elif isinstance(b, Dataset):
            if len(names) != 2:
                raise ArityMismatch(f"dataset binding for {sign!r} needs one input and one output sort")
            cols = b.outputs or b.columns
            allowed = set(doms[1])
            bad = [c for c in cols if c not in allowed]
            if bad:
                raise ArityMismatch(f"{sign!r}: columns {bad} are not values of {sorts[1]!r}")
            entries = {}
            for j, c in enumerate(cols):
                col = b.numerators[:, b.index(c)]
                for key, v in zip(b.keys, col):
                    if v:
                        entries[(key, c)] = Fraction(int(v), b.n)
        elif isinstance(b, RelationTable):
            if sorted(b.attributes) != sorted(names):
                raise ArityMismatch(f"{sign!r}: table attributes {b.attributes} vs {names}")
            idx = [b.attributes.index(n) for n in names]
            entries = {tuple(k[i] for i in idx): v for k, v in b.entries}
        elif isinstance(b, FiniteView):
            if set(b.names) != set(names):
                raise ArityMismatch(f"{sign!r}: view attributes {b.names} vs {names}")
            entries = b.keyed(names)
        else:
            raise SpecError(f"unsupported binding for {sign!r}")
        view = FiniteView(list(zip(ins, doms[:len(ins)])), list(zip(outs, doms[len(ins):])),
                          entries)
        self._views[sign] = view
        return view

    def similarity(self, sign: str):
        b = self.binding(sign)
        decl = self.spec.views[sign]
        if isinstance(b, Identity):
            return OmegaSet.crisp(decl.inputs[0], self.support(decl.inputs[0]))
        return self.view(sign)

    def diagram(self, name: str) -> MultiDiagram:
        glue = self.spec.diagrams.get(name)
        if glue is None:
            raise SpecError(f"{name!r} is not a diagram")
        if not glue.parts:
            raise SpecError(f"diagram {name!r} is empty")
        arrows = {p: self.view(p) for p in glue.parts}
        decl = self.spec.views.get(name)
        inputs = decl.inputs if decl is not None else ()
        return MultiDiagram.of(arrows, inputs)


def _check_one(m: _Model, mark, mode: str) -> MarkResult:
    text = _mark_text(mark)
    if isinstance(mark, Commutative):
        ok, value = lambda_commutative(m.diagram(mark.diagram), mark.lam, mode)
        return MarkResult(text, "commutative", mark.lam, value, "pass" if ok else "fail",
                          f"similarity mode {mode}")
    if isinstance(mark, Lim):
        ok, value = lambda_limit_check(m.view(mark.sign), m.diagram(mark.diagram), mark.lam, mode)
        return MarkResult(text, "lim", mark.lam, value, "pass" if ok else "fail",
                          f"similarity mode {mode}")
    if isinstance(mark, Colim):
        glue = m.spec.diagrams[mark.diagram]
        views = [m.spec.views[p] for p in glue.parts]
        if len(views) != 2 or (views[0].inputs, views[0].outputs) != (views[1].inputs,
                                                                      views[1].outputs):
            return MarkResult(text, "colim", mark.lam, None, "unsupported",
                              "only parallel pairs have colimits here")
        co = coequalize(m.view(glue.parts[0]), m.view(glue.parts[1]))
        target = m.view(mark.sign)
        if dict(target.attributes) != dict(co.attributes):
            return MarkResult(text, "colim", mark.lam, None, "unsupported",
                              "the sign is not a relation on the coequalizer support")
        value = view_similarity(target, co, mode)
        return MarkResult(text, "colim", mark.lam, value,
                          "pass" if value >= mark.lam else "fail", f"similarity mode {mode}")
    if isinstance(mark, IsA):
        value = is_a_check(m.view(mark.sign), m.similarity(mark.gamma))
        return MarkResult(text, "is_a", 1.0, float(value), "pass" if value == 1 else "fail")
    if isinstance(mark, Similarity):
        gamma = m.similarity(mark.sign)
        ok = True if isinstance(m.binding(mark.sign), Identity) else is_similarity(gamma)
        return MarkResult(text, "similarity", 1.0, 1.0 if ok else 0.0, "pass" if ok else "fail")
    if isinstance(mark, FormulaConstraint):
        b = m.binding(mark.sign)
        if not isinstance(b, Dataset):
            return MarkResult(text, "formula", mark.lam, None, "unsupported",
                              "formula constraints need a dataset binding")
        value = formula_lambda(b, mark)
        return MarkResult(text, "formula", mark.lam, value,
                          "pass" if value >= mark.lam - 1e-12 else "fail", "exp similarity")
    raise SpecError(f"unknown mark {mark!r}")


def formula_lambda(data: Dataset, mark: FormulaConstraint) -> float:
    """exp-similarity between the constrained column and the formula over the argument columns."""
    missing = [a for a in mark.args if a not in data.columns]
    if missing:
        raise ArityMismatch(f"{mark.sign!r}: columns {missing} are missing from the binding")
    out = mark.output
    if out is None:
        outs = data.outputs
        if len(outs) != 1:
            raise ArityMismatch(f"{mark.sign!r}: name the constrained column, the binding has "
                                f"outputs {outs}")
        out = outs[0]
    if out not in data.columns:
        raise ArityMismatch(f"{mark.sign!r}: column {out!r} is missing from the binding")
    env = {a: data.numerators[:, data.index(a)] for a in mark.args}
    got = np.broadcast_to(eval_numerators(mark.parsed, env, data.n), (len(data),))
    return exp_similarity(got / data.n, data.column(out))


def check(spec: Specification, model: Mapping[str, object], mode: str = "inf",
          partial: bool = False) -> CheckReport:
    """Evaluate every mark; with ``partial`` marks on unbound signs are skipped, not errors."""
    m = _Model(spec, model)
    report = CheckReport()
    for mark in spec.marks:
        try:
            report.results.append(_check_one(m, mark, mode))
        except UnboundSign as err:
            if not partial:
                raise
            report.results.append(MarkResult(_mark_text(mark), type(mark).__name__.lower(),
                                             getattr(mark, "lam", 1.0), None, "skipped", str(err)))
    return report


def query(spec: Specification, model: Mapping[str, object], name: str) -> FiniteView:
    """The limit of the bound diagram ``name``."""
    return limit(_Model(spec, model).diagram(name))


# ---------------------------------------------------------------------------
# enrichment


def _default_args(spec: Specification, sign: str) -> tuple[str, ...]:
    args = []
    for s in spec.views[sign].inputs:
        decl = spec.sorts[s]
        if decl.values is None:
            raise ArityMismatch(f"{sign!r} has product sort {s!r}; give the argument names")
        args.extend(decl.values)
    return tuple(args)


def integrate(spec: Specification, sign: str, formula: Formula | str, lam: float = 1.0,
              output: str | None = None, args: Sequence[str] | None = None) -> Specification:
    """Append the constraint ``sign(args) : output = formula @ lam`` to the sign's body."""
    if sign not in spec.views:
        raise SpecError(f"unknown sign {sign!r}")
    f = parse_formula(formula) if isinstance(formula, str) else formula
    args = tuple(args) if args is not None else _default_args(spec, sign)
    arity = spec.arity(sign)
    if len(args) != arity:
        raise ArityMismatch(f"{sign!r} takes {arity} arguments, got {len(args)}")
    unknown = [v for v in f.variables() if v not in args]
    if unknown:
        raise ArityMismatch(f"formula variables {unknown} are not arguments of {sign!r}")
    if not 0 < lam <= 1:
        raise SpecError("λ must lie in (0, 1]")
    mark = FormulaConstraint(sign, args, to_text(f), output, float(lam))
    if mark in spec.marks:
        log.warning("constraint %s is already present", _mark_text(mark))
        return spec

    def rebuild(items):
        out = []
        for item in items:
            if isinstance(item, ViewDecl):
                body = rebuild(item.body)
                if item.name == sign:
                    body = body + (mark,)
                item = dataclasses.replace(item, body=body)
            out.append(item)
        return tuple(out)

    return Specification(rebuild(spec.items))


# ---------------------------------------------------------------------------
# automata models


def automaton_model(aut_a, aut_b, n: int = 4, length: int = 6) -> dict[str, object]:
    """Bindings for the bundled automata specification from two automata runs."""
    from .automata import enumerate_words, io_dataset, transition_dataset

    words = list(enumerate_words(n, length))
    model: dict[str, object] = {}
    for tag, aut in (("a", aut_a), ("b", aut_b)):
        io = io_dataset(aut, words, n)
        pos = [c for c in io.columns if c not in aut.states]
        g = io.select(pos, list(aut.states))
        r = io.select(pos, list(aut.outputs))
        tr = transition_dataset(aut, words, n)
        tr = Dataset(tr.keys, [c[:-2] if c.endswith("_t") else c[:-3] + "'" for c in tr.columns],
                     tr.numerators, n,
                     [c[:-2] for c in tr.inputs], [c[:-3] + "'" for c in tr.outputs])
        model.update({f"R_{tag}": r, f"G_{tag}": g, f"G_{tag}'": g, f"T_{tag}": tr,
                      f"I_{tag}": IDENTITY, f"Gamma_{tag}": IDENTITY})
    outs = list(aut_a.outputs)
    states = list(aut_a.states)
    sel = np.array([[n if s == o else 0 for o in outs] for s in states], dtype=np.int64)
    model["P"] = Dataset(states, outs, sel, n, [], outs)
    return model
