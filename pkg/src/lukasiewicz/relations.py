"""Finite Ω-valued relations ("views") and their algebra.

A view carries named input and output attributes, each with a finite domain,
and a sparse map from full tuples (inputs then outputs) to exact truth values.
Absent tuples have value 0.  Composition joins views on shared attribute
names, combining with ⊗ and aggregating eliminated attributes with ⊕.
"""
from __future__ import annotations

import graphlib
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .logic import (ShapeMismatch, fuse_all, sum_all, t_fusion, t_implies,
                    t_sum)

log = logging.getLogger(__name__)

Attribute = tuple[str, tuple]


class RelationError(ValueError):
    pass


class DomainMismatch(RelationError):
    pass


class StructuralIndependenceError(RelationError):
    pass


class CyclicInputs(RelationError):
    pass


def _attrs(spec) -> tuple[Attribute, ...]:
    items = spec.items() if isinstance(spec, Mapping) else spec
    return tuple((str(name), tuple(dom)) for name, dom in items)


def _frac(v) -> Fraction:
    return v.fraction if hasattr(v, "fraction") else Fraction(v)


@dataclass(frozen=True, eq=False)
class FiniteView:
    inputs: tuple[Attribute, ...]
    outputs: tuple[Attribute, ...]
    entries: Mapping[tuple, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", _attrs(self.inputs))
        object.__setattr__(self, "outputs", _attrs(self.outputs))
        names = self.names
        if len(set(names)) != len(names):
            raise RelationError(f"attribute names must be unique: {names}")
        domains = [set(dom) for _, dom in self.attributes]
        clean = {}
        for key, value in self.entries.items():
            key = tuple(key)
            if len(key) != len(names):
                raise RelationError(f"tuple {key} does not match attributes {names}")
            for x, dom, name in zip(key, domains, names):
                if x not in dom:
                    raise DomainMismatch(f"{x!r} is not in the domain of {name!r}")
            v = _frac(value)
            if not 0 <= v <= 1:
                raise RelationError(f"value {v} outside [0, 1]")
            if v:
                clean[key] = v
        object.__setattr__(self, "entries", clean)

    @property
    def attributes(self) -> tuple[Attribute, ...]:
        return self.inputs + self.outputs

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.inputs)

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.outputs)

    def domain(self, name: str) -> tuple:
        for n, dom in self.attributes:
            if n == name:
                return dom
        raise KeyError(name)

    def __call__(self, *key) -> Fraction:
        return self.entries.get(tuple(key), Fraction(0))

    def size(self) -> int:
        """Number of points of the full attribute product."""
        total = 1
        for _, dom in self.attributes:
            total *= len(dom)
        return total

    def tuples(self) -> Iterable[tuple]:
        return itertools.product(*(dom for _, dom in self.attributes))

    def keyed(self, order: Sequence[str]) -> dict[tuple, Fraction]:
        """Entries re-keyed by the attribute order ``order``."""
        idx = [self.names.index(n) for n in order]
        return {tuple(k[i] for i in idx): v for k, v in self.entries.items()}

    def same_relation(self, other: "FiniteView") -> bool:
        """Equal as relations over attribute names, ignoring order and the input/output split."""
        if dict(self.attributes) != dict(other.attributes):
            return False
        return self.entries == other.keyed(self.names)

    def __repr__(self):
        ins = ",".join(self.input_names)
        outs = ",".join(self.output_names)
        return f"FiniteView({ins} -> {outs}; {len(self.entries)} nonzero)"


@dataclass(frozen=True, eq=False)
class OmegaSet:
    """A support set with a similarity; ``[x=y]`` is ``sim[(x, y)]`` (absent = 0)."""

    name: str
    support: tuple
    sim: Mapping[tuple, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "sim", {tuple(k): _frac(v) for k, v in self.sim.items() if v})

    @classmethod
    def crisp(cls, name: str, support: Iterable) -> "OmegaSet":
        support = tuple(support)
        return cls(name, support, {(x, x): Fraction(1) for x in support})

    def __call__(self, x, y) -> Fraction:
        return self.sim.get((x, y), Fraction(0))

    def membership(self, x) -> Fraction:
        return self(x, x)

    def view(self) -> FiniteView:
        return FiniteView([(self.name, self.support)], [(self.name + "'", self.support)],
                          self.sim)


@dataclass(frozen=True, eq=False)
class MultiDiagram:
    nodes: Mapping[str, OmegaSet]
    arrows: Mapping[str, FiniteView]
    inputs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        for name, arrow in self.arrows.items():
            for attr, dom in arrow.attributes:
                if attr not in self.nodes:
                    raise RelationError(f"arrow {name!r} uses unknown node {attr!r}")
                if tuple(dom) != self.nodes[attr].support:
                    raise DomainMismatch(f"arrow {name!r} disagrees with node {attr!r} support")
        for s in self.inputs:
            if s not in self.nodes:
                raise RelationError(f"input node {s!r} is not a node")

    @classmethod
    def of(cls, arrows: Mapping[str, FiniteView], inputs: Sequence[str] = (),
           nodes: Mapping[str, OmegaSet] | None = None) -> "MultiDiagram":
        """Diagram whose nodes are read off the arrows' attributes (crisp unless given)."""
        found: dict[str, OmegaSet] = {}
        for arrow in arrows.values():
            for attr, dom in arrow.attributes:
                found.setdefault(attr, OmegaSet.crisp(attr, dom))
        found.update(nodes or {})
        return cls(found, dict(arrows), tuple(inputs))


# ---------------------------------------------------------------------------
# joins


def _check_shared(names_a, attrs_a: dict, names_b, attrs_b: dict) -> list[str]:
    shared = [n for n in names_a if n in attrs_b]
    for n in shared:
        if tuple(attrs_a[n]) != tuple(attrs_b[n]):
            raise DomainMismatch(f"attribute {n!r} has different domains")
    return shared


def _natural_join(rows: dict[tuple, Fraction], names: list[str],
                  entries: Mapping[tuple, Fraction], other: Sequence[str]):
    """⊗-join of two sparse relations on their common attribute names."""
    common = [n for n in other if n in names]
    new = [n for n in other if n not in names]
    ci = [names.index(n) for n in common]
    oi = [list(other).index(n) for n in common]
    ni = [list(other).index(n) for n in new]
    index = defaultdict(list)
    for key, v in entries.items():
        index[tuple(key[i] for i in oi)].append((tuple(key[i] for i in ni), v))
    out = {}
    for key, v in rows.items():
        for rest, w in index.get(tuple(key[i] for i in ci), ()):
            value = t_fusion(v, w)
            if value:
                out[key + rest] = value
    return out, names + new


def compose(r: FiniteView, g: FiniteView) -> FiniteView:
    """Tensor composition R⊗G: join on shared names, ⊕ over O(R)∩I(G)."""
    ra, ga = dict(r.attributes), dict(g.attributes)
    _check_shared(r.names, ra, g.names, ga)
    summed = set(r.output_names) & set(g.input_names)
    inputs = list(r.input_names) + [n for n in g.input_names
                                    if n not in summed and n not in r.input_names]
    outputs = [n for n in r.output_names if n not in summed]
    outputs += [n for n in g.output_names if n not in outputs and n not in inputs]
    joined, names = _natural_join(dict(r.entries), list(r.names), g.entries, g.names)
    keep = inputs + outputs
    idx = [names.index(n) for n in keep]
    acc: dict[tuple, Fraction] = {}
    for key, v in joined.items():
        k = tuple(key[i] for i in idx)
        acc[k] = t_sum(acc.get(k, Fraction(0)), v)
    dom = {**ga, **ra}
    return FiniteView([(n, dom[n]) for n in inputs], [(n, dom[n]) for n in outputs], acc)


def project(r: FiniteView, side: str = "inputs") -> FiniteView:
    """Keep ``side`` ("inputs" or "outputs") and ⊕-fold the other side away."""
    if side not in ("inputs", "outputs"):
        raise ValueError("side must be 'inputs' or 'outputs'")
    keep = r.inputs if side == "inputs" else r.outputs
    idx = [r.names.index(n) for n, _ in keep]
    acc: dict[tuple, Fraction] = {}
    for key, v in r.entries.items():
        k = tuple(key[i] for i in idx)
        acc[k] = t_sum(acc.get(k, Fraction(0)), v)
    if side == "inputs":
        return FiniteView(keep, (), acc)
    return FiniteView((), keep, acc)


def row(r: FiniteView, fixed: Sequence) -> dict[tuple, Fraction]:
    """R(ā, _) as a dense map over the output product."""
    fixed = tuple(fixed)
    return {b: r(*fixed, *b) for b in itertools.product(*(d for _, d in r.outputs))}


def conditional(r: FiniteView, fixed: Sequence) -> FiniteView:
    """R(_|ā) = R(ā)_B ⇒ R(ā, _), the solution of R(ā)_B ⊗ x = R(ā, _)."""
    fixed = tuple(fixed)
    if len(fixed) != len(r.inputs):
        raise RelationError("fixed tuple must cover every input attribute")
    for x, (name, dom) in zip(fixed, r.inputs):
        if x not in dom:
            raise DomainMismatch(f"{x!r} is not in the domain of {name!r}")
    values = row(r, fixed)
    mass = sum_all(values.values())
    if mass == 0:
        log.warning("conditional on %s: projection is 0, result is all ones", fixed)
    return FiniteView((), r.outputs, {b: t_implies(mass, v) for b, v in values.items()})


def independent(r: FiniteView, g: FiniteView) -> bool:
    try:
        rg, gr = compose(r, g), compose(g, r)
    except DomainMismatch as err:
        raise StructuralIndependenceError(str(err)) from err
    return rg.same_relation(gr)


def limit(d: MultiDiagram) -> FiniteView:
    """(Lim D)(x̄) = ⊗ over arrows f of D(f) at the restriction of x̄."""
    rows: dict[tuple, Fraction] = {(): Fraction(1)}
    names: list[str] = []
    for arrow in d.arrows.values():
        rows, names = _natural_join(rows, names, arrow.entries, arrow.names)
    for node, oset in d.nodes.items():
        if node not in names:
            rows = {k + (x,): v for k, v in rows.items() for x in oset.support}
            names.append(node)
    order = list(d.inputs) + [n for n in d.nodes if n not in d.inputs]
    idx = [names.index(n) for n in order]
    entries = {tuple(k[i] for i in idx): v for k, v in rows.items()}
    attrs = [(n, d.nodes[n].support) for n in order]
    k = len(d.inputs)
    return FiniteView(attrs[:k], attrs[k:], entries)


def coproduct(alpha: OmegaSet, beta: OmegaSet) -> FiniteView:
    """α⊕β on the tagged disjoint union; elements are (0, a) and (1, b)."""
    support = [(0, a) for a in alpha.support] + [(1, b) for b in beta.support]
    entries = {}
    for (i, x), (j, y) in itertools.product(support, repeat=2):
        if i == j:
            v = alpha(x, y) if i == 0 else beta(x, y)
            if v:
                entries[((i, x), (j, y))] = v
    name = f"{alpha.name}+{beta.name}"
    return FiniteView([(name, tuple(support))], [(name + "'", tuple(support))], entries)


def _tuples(attrs) -> list[tuple]:
    return list(itertools.product(*(d for _, d in attrs)))


def coequalize(f: FiniteView, g: FiniteView, alpha: OmegaSet | None = None,
               beta: OmegaSet | None = None, inner: str = "sum") -> FiniteView:
    """Colimit of a parallel pair f, g: α:A → β:B on the support A∐B.

    Each of the five clauses is evaluated as written.  ``inner`` selects how the
    three factors inside the first three clauses combine: "sum" (⊕, as
    written) or "fusion" (⊗).
    """
    if f.inputs != g.inputs or f.outputs != g.outputs:
        raise DomainMismatch("f and g must share endpoints")
    if inner not in ("sum", "fusion"):
        raise ValueError("inner must be 'sum' or 'fusion'")
    A, B = _tuples(f.inputs), _tuples(f.outputs)
    alpha = alpha or OmegaSet.crisp("A", A)
    beta = beta or OmegaSet.crisp("B", B)
    if set(alpha.support) != set(A) or set(beta.support) != set(B):
        raise DomainMismatch("Ω-set supports do not match the endpoints of f and g")
    comb = t_sum if inner == "sum" else t_fusion
    support = [(0, a) for a in A] + [(1, b) for b in B]

    def fv(view, src, dst):
        # off-support pairs evaluate to 0
        if src[0] != 0 or dst[0] != 1:
            return Fraction(0)
        return view(*src[1], *dst[1])

    def triple(x, y, z):
        return comb(comb(x, y), z)

    entries = {}
    for u, u2 in itertools.product(support, repeat=2):
        terms = []
        for h in (f, g):
            terms.append(sum_all(
                triple(fv(h, u, (1, b)), fv(h, u2, (1, b2)), beta(b, b2))
                for b in B for b2 in B))
        terms.append(sum_all(
            triple(fv(f, (0, a), u), fv(g, (0, a2), u2), alpha(a, a2))
            for a in A for a2 in A))
        terms.append(alpha(u[1], u2[1]) if u[0] == u2[0] == 0 else Fraction(0))
        terms.append(beta(u[1], u2[1]) if u[0] == u2[0] == 1 else Fraction(0))
        v = sum_all(terms)
        if v:
            entries[(u, u2)] = v
    return FiniteView([("coeq", tuple(support))], [("coeq'", tuple(support))], entries)


# ---------------------------------------------------------------------------
# similarity-based checks


def _sparse_similarity(a: Mapping, b: Mapping, total: int, mode: str) -> float:
    keys = set(a) | set(b)
    diffs = [abs(a.get(k, Fraction(0)) - b.get(k, Fraction(0))) for k in keys]
    if total == 0:
        return 1.0
    if mode == "exp":
        import math
        return math.exp(-float(sum(diffs, Fraction(0))) / total)
    if mode == "inf":
        return float(1 - max(diffs, default=Fraction(0)))
    if mode == "and":
        return float(max(Fraction(0), 1 - sum(diffs, Fraction(0))))
    raise ValueError(f"unknown similarity mode {mode!r}")


def view_similarity(a: FiniteView, b: FiniteView, mode: str = "inf") -> float:
    """Similarity of two views over the full product of their (shared) attributes."""
    if dict(a.attributes) != dict(b.attributes):
        raise ShapeMismatch(f"views differ in attributes: {a.names} vs {b.names}")
    return _sparse_similarity(a.entries, b.keyed(a.names), a.size(), mode)


def _check_acyclic(d: MultiDiagram):
    s = set(d.inputs)
    graph = graphlib.TopologicalSorter()
    for arrow in d.arrows.values():
        srcs = [n for n in arrow.input_names if n in s]
        dsts = [n for n in arrow.output_names if n in s]
        for dst in dsts:
            graph.add(dst, *srcs)
    try:
        graph.prepare()
    except graphlib.CycleError as err:
        raise CyclicInputs(f"input nodes form a cycle: {err.args[1]}") from err


def commutativity_sides(d: MultiDiagram) -> tuple[dict, dict, int]:
    """Both sides of the commutativity equation, keyed by input-node tuples."""
    _check_acyclic(d)
    lim = limit(d)
    k = len(d.inputs)
    lhs: dict[tuple, Fraction] = {}
    for key, v in lim.entries.items():
        s = key[:k]
        if v > lhs.get(s, Fraction(0)):
            lhs[s] = v
    rest = [n for n in d.nodes if n not in d.inputs]
    best_rest = [max((d.nodes[n].membership(x) for x in d.nodes[n].support), default=Fraction(0))
                 for n in rest]
    rhs = {}
    in_sets = [d.nodes[n] for n in d.inputs]
    total = 0
    for s in itertools.product(*(o.support for o in in_sets)):
        total += 1
        v = fuse_all([o.membership(x) for o, x in zip(in_sets, s)] + best_rest)
        if v:
            rhs[s] = v
    return lhs, rhs, total


def lambda_commutative(d: MultiDiagram, lam: float, mode: str = "inf") -> tuple[bool, float]:
    lhs, rhs, total = commutativity_sides(d)
    value = _sparse_similarity(lhs, rhs, total, mode)
    return value >= lam, value


def lambda_limit_check(r: FiniteView, d: MultiDiagram, lam: float,
                       mode: str = "inf") -> tuple[bool, float]:
    value = view_similarity(r, limit(d), mode)
    return value >= lam, value


def power_similarity(alpha: OmegaSet, beta: OmegaSet, t: FiniteView, h: FiniteView) -> Fraction:
    """(α⊸β)(t, h) = ⋁_{b0,b1} ⊕_a α(a,a)⊗t(a,b0)⊗h(a,b1)⊗β(b0,b1)."""
    if t.inputs != h.inputs or t.outputs != h.outputs:
        raise ShapeMismatch("t and h must have the same attributes")
    A, B = _tuples(t.inputs), _tuples(t.outputs)
    if set(alpha.support) != set(A) or set(beta.support) != set(B):
        raise ShapeMismatch("Ω-set supports do not match the views")
    best = Fraction(0)
    for b0, b1 in itertools.product(B, repeat=2):
        v = sum_all(fuse_all((alpha(a, a), t(*a, *b0), h(*a, *b1), beta(b0, b1))) for a in A)
        best = max(best, v)
    return best


def _square(gamma: FiniteView):
    if [d for _, d in gamma.inputs] != [d for _, d in gamma.outputs]:
        raise ShapeMismatch("similarity needs identical input and output domains")
    return _tuples(gamma.inputs)


def is_similarity(gamma: FiniteView | OmegaSet) -> bool:
    if isinstance(gamma, OmegaSet):
        gamma = gamma.view()
    pts = _square(gamma)
    g = lambda x, y: gamma(*x, *y)
    for x in pts:
        if g(x, x) != 1:
            return False
    for x, y in itertools.product(pts, repeat=2):
        if g(x, y) != g(y, x):
            return False
    for x, y, z in itertools.product(pts, repeat=3):
        if t_fusion(g(x, y), g(y, z)) > g(x, z):
            return False
    return True


def is_a_check(r: FiniteView, gamma: FiniteView | OmegaSet) -> Fraction:
    """⊗ over a0, a1, b of (R(a0,b) ⊗ R(a1,b) ⇒ Γ(a0,a1)); 1 means R is an is_a view."""
    A, B = _tuples(r.inputs), _tuples(r.outputs)
    if isinstance(gamma, OmegaSet) and _is_identity(gamma, A):
        return _is_a_identity(r)
    if isinstance(gamma, OmegaSet):
        g = gamma
    else:
        if [d for _, d in gamma.inputs] != [d for _, d in r.inputs]:
            raise ShapeMismatch("Γ must be a similarity on the input domain of R")
        g = lambda x, y: gamma(*x, *y)
    terms = (t_implies(t_fusion(r(*a0, *b), r(*a1, *b)), g(a0, a1))
             for a0 in A for a1 in A for b in B)
    return fuse_all(terms)


def _is_identity(gamma: OmegaSet, points: list[tuple]) -> bool:
    return (len(gamma.sim) == len(gamma.support) and all(len(p) == 1 for p in points)
            and all(gamma(x, x) == 1 for x in gamma.support))


def _is_a_identity(r: FiniteView) -> Fraction:
    """is_a against the crisp identity: 1 − Σ over b and ordered pairs a0≠a1 of R(a0,b)⊗R(a1,b).

    Pairs are counted from a histogram of each column's values, so the cost
    does not grow with the square of the input domain.
    """
    k = len(r.inputs)
    columns: dict[tuple, dict[Fraction, int]] = defaultdict(lambda: defaultdict(int))
    for key, v in r.entries.items():
        columns[key[k:]][v] += 1
    total = Fraction(0)
    for hist in columns.values():
        items = list(hist.items())
        for v, cv in items:
            for w, cw in items:
                total += cv * (cw - (v == w)) * t_fusion(v, w)
        if total >= 1:
            return Fraction(0)
    return max(Fraction(0), 1 - total)


def is_epi(r: FiniteView) -> bool:
    A, B = _tuples(r.inputs), _tuples(r.outputs)
    return fuse_all(sum_all(r(*a, *b) for a in A) for b in B) == 1


def view_from_function(inputs, outputs, fn) -> FiniteView:
    """Crisp view of a function mapping input tuples to output tuples."""
    inputs, outputs = _attrs(inputs), _attrs(outputs)
    entries = {}
    for a in _tuples(inputs):
        b = fn(*a)
        b = b if isinstance(b, tuple) else (b,)
        entries[a + b] = Fraction(1)
    return FiniteView(inputs, outputs, entries)
