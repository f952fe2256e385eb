"""Layered networks with the truncated-identity activation ψ(x) = min(1, max(0, x)).

Crisp networks (weights in {-1, 0, 1}, integer biases) are interpretations of
Łukasiewicz formulas.  This module classifies single neurons, binarizes them
with rule R, approximates unrepresentable neurons by the most similar
representable expansion, and translates whole networks to formulas and back.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .logic import (Formula, Fusion, Implies, Join, Meet, Neg, One, ShapeMismatch, StrongSum,
                    Var, Zero, conjoin, disjoin, eval_numerators, exp_similarity, grid,
                    substitute, truth_subtable)


class NetworkError(ValueError):
    pass


def psi(x):
    return np.clip(x, 0.0, 1.0)


@dataclass
class Layer:
    weights: np.ndarray  # neurons × previous width
    biases: np.ndarray

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.biases = np.asarray(self.biases, dtype=float).reshape(-1)
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ShapeMismatch("one bias per neuron required")

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "Layer":
        return Layer(self.weights.copy(), self.biases.copy())


@dataclass
class CastroNetwork:
    inputs: list[str]
    layers: list[Layer]
    crisp: bool = False

    def __post_init__(self):
        self.inputs = list(self.inputs)
        if not self.layers:
            raise NetworkError("a network needs at least one layer")
        width = len(self.inputs)
        for i, layer in enumerate(self.layers):
            if layer.weights.shape[1] != width:
                raise ShapeMismatch(f"layer {i} expects {layer.weights.shape[1]} inputs, "
                                    f"previous width is {width}")
            width = layer.width
        if self.crisp and not is_crisp_params(self.layers):
            raise NetworkError("crisp networks need weights in {-1,0,1} and integer biases")

    @classmethod
    def from_lists(cls, inputs, layers, crisp=None) -> "CastroNetwork":
        built = [Layer(w, b) for w, b in layers]
        if crisp is None:
            crisp = is_crisp_params(built)
        return cls(list(inputs), built, crisp)

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].width

    @property
    def integral(self) -> bool:
        return all(np.all(l.weights == np.round(l.weights)) and np.all(l.biases == np.round(l.biases))
                   for l in self.layers)

    @property
    def topology(self) -> list[int]:
        return [layer.width for layer in self.layers]

    def copy(self) -> "CastroNetwork":
        return CastroNetwork(list(self.inputs), [l.copy() for l in self.layers], self.crisp)

    def activations(self, x: np.ndarray) -> list[np.ndarray]:
        """Input followed by every layer's output, for a batch ``x`` (rows × inputs)."""
        out = [x]
        for layer in self.layers:
            out.append(psi(out[-1] @ layer.weights.T + layer.biases))
        return out

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != len(self.inputs):
            raise ShapeMismatch(f"expected {len(self.inputs)} inputs, got {x.shape[1]}")
        y = self.activations(x)[-1]
        return y[0] if single else y

    def forward_numerators(self, k: np.ndarray, n: int) -> np.ndarray:
        """Exact evaluation of an integer-weight network on numerator inputs over S_n."""
        if not self.integral:
            raise NetworkError("exact evaluation needs integer weights and biases")
        a = np.atleast_2d(np.asarray(k, dtype=np.int64))
        for layer in self.layers:
            w = layer.weights.astype(np.int64)
            b = layer.biases.astype(np.int64)
            a = np.clip(a @ w.T + b * n, 0, n)
        return a

    def grid_table(self, n: int, output: int = 0) -> np.ndarray:
        """Output numerators over the full (S_n)^inputs grid."""
        return self.forward_numerators(grid(len(self.inputs), n), n)[:, output]

    def to_json(self) -> dict:
        def num(v):
            return int(v) if self.crisp else float(v)
        return {
            "inputs": self.inputs,
            "layers": [{"weights": [[num(w) for w in row] for row in l.weights],
                        "biases": [num(b) for b in l.biases]} for l in self.layers],
            "crisp": self.crisp,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CastroNetwork":
        try:
            layers = [Layer(l["weights"], l["biases"]) for l in data["layers"]]
            crisp = bool(data.get("crisp", False))
            if crisp:
                for l in data["layers"]:
                    for v in itertools.chain(l["biases"], *l["weights"]):
                        if not isinstance(v, int):
                            raise NetworkError(f"crisp network holds non-integer {v!r}")
            return cls(list(data["inputs"]), layers, crisp)
        except KeyError as err:
            raise NetworkError(f"network file lacks field {err}") from None

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CastroNetwork":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def is_crisp_params(layers: Sequence[Layer]) -> bool:
    for l in layers:
        if not np.all(np.isin(l.weights, (-1.0, 0.0, 1.0))):
            return False
        if not np.all(l.biases == np.round(l.biases)):
            return False
    return True


# ---------------------------------------------------------------------------
# single neurons


class NeuronClass(enum.Enum):
    CONJUNCTION = "conjunction"
    DISJUNCTION = "disjunction"
    CONSTANT0 = "constant0"
    CONSTANT1 = "constant1"
    UNREPRESENTABLE = "unrepresentable"


@dataclass(frozen=True)
class NeuronConfig:
    weights: tuple[int, ...]
    bias: int
    names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        object.__setattr__(self, "bias", int(self.bias))
        if not self.names:
            object.__setattr__(self, "names",
                               tuple(f"x{i + 1}" for i in range(len(self.weights))))
        if len(self.names) != len(self.weights):
            raise ShapeMismatch("one name per weight")
        if any(w not in (-1, 0, 1) for w in self.weights):
            raise NetworkError("crisp neuron weights must be -1, 0 or 1")

    @property
    def negatives(self) -> int:
        return sum(1 for w in self.weights if w < 0)

    @property
    def positives(self) -> int:
        return sum(1 for w in self.weights if w > 0)

    def reduced(self) -> "NeuronConfig":
        """Drop zero-weight inputs."""
        keep = [i for i, w in enumerate(self.weights) if w]
        return NeuronConfig(tuple(self.weights[i] for i in keep), self.bias,
                            tuple(self.names[i] for i in keep))

    def table(self, n: int) -> np.ndarray:
        pts = grid(len(self.weights), n)
        return np.clip(pts @ np.array(self.weights, dtype=np.int64) + self.bias * n, 0, n)

    def __str__(self):
        args = ",".join(("-" if w < 0 else "") + name
                        for w, name in zip(self.weights, self.names) if w)
        return f"psi_{self.bias}({args})"


def classify_counts(n_neg: int, n_pos: int, bias: int) -> NeuronClass:
    if bias >= n_neg + 1:
        return NeuronClass.CONSTANT1
    if bias <= -n_pos:
        return NeuronClass.CONSTANT0
    if bias == -n_pos + 1:
        return NeuronClass.CONJUNCTION
    if bias == n_neg:
        return NeuronClass.DISJUNCTION
    return NeuronClass.UNREPRESENTABLE


def classify_neuron(c: NeuronConfig) -> NeuronClass:
    return classify_counts(c.negatives, c.positives, c.bias)


def is_representable(c: NeuronConfig, n: int | None = None) -> bool:
    return classify_neuron(c) is not NeuronClass.UNREPRESENTABLE


def _literal(w: int, f: Formula) -> Formula:
    return Neg(f) if w < 0 else f


def neuron_to_formula(c: NeuronConfig) -> Formula:
    """Formula for a conjunction or disjunction neuron, literals in input order."""
    kind = classify_neuron(c)
    r = c.reduced()
    literals = [_literal(w, Var(name)) for w, name in zip(r.weights, r.names)]
    if kind is NeuronClass.CONJUNCTION:
        return conjoin(literals)
    if kind is NeuronClass.DISJUNCTION:
        return disjoin(literals)
    raise NetworkError(f"{c} is {kind.value}; no exact formula")


def constant_formula(c: NeuronConfig) -> Formula | None:
    kind = classify_neuron(c)
    if kind is NeuronClass.CONSTANT0:
        return Zero()
    if kind is NeuronClass.CONSTANT1:
        return One()
    return None


# ---------------------------------------------------------------------------
# rule R


@dataclass(frozen=True)
class Tree:
    """A binarized neuron: ψ_bias over signed arguments that are names or subtrees."""

    bias: int
    args: tuple[tuple[int, "str | Tree"], ...]

    def formula(self) -> Formula:
        parts = [_literal(w, a.formula() if isinstance(a, Tree) else Var(a))
                 for w, a in self.args]
        n_neg = sum(1 for w, _ in self.args if w < 0)
        n_pos = len(self.args) - n_neg
        kind = classify_counts(n_neg, n_pos, self.bias)
        if kind is NeuronClass.CONJUNCTION:
            return conjoin(parts)
        if kind is NeuronClass.DISJUNCTION:
            return disjoin(parts)
        raise NetworkError(f"tree node {self} is not representable")

    def __str__(self):
        args = ",".join(("-" if w < 0 else "") + str(a) for w, a in self.args)
        return f"psi_{self.bias}({args})"


def _nonconstant_biases(n_neg: int, n_pos: int) -> range:
    return range(-n_pos + 1, n_neg + 1)


@lru_cache(maxsize=None)
def _expand(args: tuple[tuple[int, str], ...], bias: int, canonical: bool) -> tuple[Tree, ...]:
    if len(args) <= 2:
        return (Tree(bias, args),)
    out = []
    # in canonical mode only the first input of each sign moves: same-sign inputs
    # are interchangeable, so the other choices are permutations of these trees
    firsts: dict = {}
    for k, (w, _) in enumerate(args):
        firsts.setdefault(w < 0 if canonical else k, k)
    for k in sorted(firsts.values()):
        moved = args[k]
        rest = args[:k] + args[k + 1:]
        rn = sum(1 for w, _ in rest if w < 0)
        for b0 in _nonconstant_biases(rn, len(rest) - rn):
            b1 = bias - b0
            neg = 1 if moved[0] < 0 else 0
            if b1 not in _nonconstant_biases(neg, 2 - neg):
                continue
            for inner in _expand(rest, b0, canonical):
                # the outer bias may not exceed the bias of the binary neuron just inside
                if b1 <= inner.bias:
                    out.append(Tree(b1, (moved, (1, inner))))
    return tuple(out)


def rule_r_expansions(c: NeuronConfig, n: int | None = None,
                      canonical: bool = False) -> list[Tree]:
    """Binary trees reachable by rule R; with ``n`` given, deduplicated by S_n truth table.

    ``canonical`` keeps one representative per permutation of same-sign inputs.
    """
    r = c.reduced()
    args = tuple(zip(r.weights, r.names))
    trees = list(_expand(args, r.bias, canonical))
    if n is None:
        return trees
    seen, out = set(), []
    for t in trees:
        key = tree_table(t, r.names, n).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(t)
    return out


def tree_table(t: Tree, names: Sequence[str], n: int) -> np.ndarray:
    pts = grid(len(names), n)
    env = {name: pts[:, i] for i, name in enumerate(names)}
    return _eval_tree(t, env, n, len(pts))


def _eval_tree(t: Tree, env, n, size) -> np.ndarray:
    acc = np.full(size, t.bias * n, dtype=np.int64)
    for w, a in t.args:
        v = _eval_tree(a, env, n, size) if isinstance(a, Tree) else env[a]
        acc = acc + w * v
    return np.clip(acc, 0, n)


def approximation_candidates(c: NeuronConfig, n: int) -> list[tuple[Formula, float]]:
    """Rule-R expansions ranked by exp-similarity to ``c`` on its own S_n grid.

    Permutations of same-sign inputs share a similarity, so one representative
    per permutation class is ranked (the one keeping those inputs in order).

    Ties go to fewer connectives, then to the lexicographically smaller text.
    """
    r = c.reduced()
    target = r.table(n) / n
    ranked = []
    for tree in rule_r_expansions(r, n, canonical=True):
        f = tree.formula()
        lam = exp_similarity(target, tree_table(tree, r.names, n) / n)
        ranked.append(((-lam, f.connectives(), str(f)), f, lam))
    ranked.sort(key=lambda item: item[0])
    return [(f, lam) for _, f, lam in ranked]


def best_representable_approx(c: NeuronConfig, n: int) -> tuple[Formula, float]:
    if constant_formula(c) is not None:
        raise NetworkError(f"{c} is constant; nothing to approximate")
    if is_representable(c):
        return neuron_to_formula(c), 1.0
    ranked = approximation_candidates(c, n)
    if not ranked:
        raise NetworkError(f"rule R produced no candidates for {c}")
    return ranked[0]


def _pick_override(c: NeuronConfig, n: int, f: Formula) -> tuple[Formula, float]:
    """Accept ``f`` only if its similarity ties with the best candidate for ``c``."""
    best = approximation_candidates(c, n)[0][1]
    r = c.reduced()
    lam = exp_similarity(r.table(n) / n, truth_subtable(f, n, r.names).values)
    if lam < best - 1e-12:
        raise NetworkError(f"{f} is not among the most similar approximations of {c}")
    return f, lam


@dataclass
class NeuronReport:
    layer: int
    index: int
    name: str
    config: str
    kind: str
    formula: str
    similarity: float


@dataclass
class Translation:
    formula: Formula
    similarity: float
    neurons: list[NeuronReport] = field(default_factory=list)


def neuron_names(net: CastroNetwork) -> list[list[str]]:
    """Default hidden-unit names: i1, i2, ... for the first layer, j1, ... for the next."""
    taken = set(net.inputs)
    out = []
    for li, layer in enumerate(net.layers):
        prefix = chr(ord("i") + li) if li < 18 else f"h{li}_"
        names = [f"{prefix}{j + 1}" for j in range(layer.width)]
        names = [nm if nm not in taken else "_" + nm for nm in names]
        out.append(names)
    return out


def translate_network(net: CastroNetwork, n: int, output: int = 0,
                      overrides: dict[tuple[int, int], Formula] | None = None) -> Translation:
    """Bottom-up translation; constants are folded into the next layer's bias.

    ``overrides`` maps (layer, index) of an unrepresentable neuron to a formula
    over that neuron's input names; it must tie with the best approximation.
    """
    if not net.crisp:
        raise NetworkError("translation needs a crisp network")
    overrides = overrides or {}
    unit_names = neuron_names(net)
    current: list[Formula] = [Var(name) for name in net.inputs]
    local = list(net.inputs)
    reports = []
    for li, layer in enumerate(net.layers):
        nxt = []
        for j in range(layer.width):
            weights, names, mapping = [], [], {}
            bias = int(layer.biases[j])
            for i, w in enumerate(layer.weights[j].astype(int)):
                if not w:
                    continue
                src = current[i]
                if isinstance(src, (Zero, One)):
                    bias += w if isinstance(src, One) else 0
                    continue
                mapping[local[i]] = src
                weights.append(int(w))
                names.append(local[i])
            cfg = NeuronConfig(tuple(weights), bias, tuple(names))
            kind = classify_neuron(cfg)
            lam = 1.0
            if not weights:
                f = One() if bias >= 1 else Zero()
            elif kind in (NeuronClass.CONSTANT0, NeuronClass.CONSTANT1):
                f = constant_formula(cfg)
            elif kind is NeuronClass.UNREPRESENTABLE:
                if (li, j) in overrides:
                    f, lam = _pick_override(cfg, n, overrides[(li, j)])
                else:
                    f, lam = best_representable_approx(cfg, n)
            else:
                f = neuron_to_formula(cfg)
            reports.append(NeuronReport(li, j, unit_names[li][j], str(cfg), kind.value, str(f), lam))
            nxt.append(substitute(f, mapping))
        current = nxt
        local = unit_names[li]
    formula = current[output]
    table = net.grid_table(n, output)
    pts = grid(len(net.inputs), n)
    env = {name: pts[:, i] for i, name in enumerate(net.inputs)}
    got = np.broadcast_to(eval_numerators(formula, env, n), table.shape)
    lam = exp_similarity(table / n, got / n)
    return Translation(formula, lam, reports)


def network_to_formula(net: CastroNetwork, n: int, output: int = 0) -> tuple[Formula, float]:
    t = translate_network(net, n, output)
    return t.formula, t.similarity


def to_basic(f: Formula) -> Formula:
    """Rewrite min/max with ⊗, ⊕, ⇒ and ¬: min(a,b) = a⊗(¬a⊕b), max(a,b) = (a⇒b)⇒b."""
    if isinstance(f, (Var, Zero, One)):
        return f
    if isinstance(f, Neg):
        return Neg(to_basic(f.child))
    a, b = to_basic(f.left), to_basic(f.right)
    if isinstance(f, Meet):
        return Fusion(a, StrongSum(Neg(a), b))
    if isinstance(f, Join):
        return Implies(Implies(a, b), b)
    return type(f)(a, b)


# connective -> (weights on children, bias)
_NEURON = {Fusion: ((1, 1), -1), StrongSum: ((1, 1), 0), Implies: ((-1, 1), 1), Neg: ((-1,), 1)}


def formula_to_network(f: Formula, inputs: Sequence[str] | None = None) -> CastroNetwork:
    """Crisp layered network computing ``f``: one neuron per connective at layer height-1.

    Shorter branches are carried up by identity neurons; neurons within a layer
    appear in depth-first order.
    """
    f = to_basic(f)
    names = list(inputs) if inputs is not None else f.variables()
    missing = set(f.variables()) - set(names)
    if missing:
        raise NetworkError(f"inputs do not cover variables {sorted(missing)}")
    depth = max(f.height() - 1, 1)
    rows: list[list[tuple[dict[int, int], int]]] = [[] for _ in range(depth + 1)]

    def add(layer: int, weights: dict[int, int], bias: int) -> int:
        rows[layer].append((weights, bias))
        return len(rows[layer]) - 1

    def emit(node: Formula, target: int):
        """Index in layer ``target`` (0 = inputs) holding ``node``; constants stay symbolic."""
        if isinstance(node, Zero):
            return ("const", 0)
        if isinstance(node, One):
            return ("const", 1)
        level = 0 if isinstance(node, Var) else node.height() - 1
        if target > level:
            src = emit(node, target - 1)
            if isinstance(src, tuple):
                return src
            return add(target, {src: 1}, 0)
        if isinstance(node, Var):
            return names.index(node.name)
        ws, bias = _NEURON[type(node)]
        weights: dict[int, int] = {}
        for w, child in zip(ws, node.children()):
            src = emit(child, target - 1)
            if isinstance(src, tuple):
                bias += w * src[1]
            else:
                weights[src] = weights.get(src, 0) + w
        return add(target, weights, bias)

    top = emit(f, depth)
    if isinstance(top, tuple):
        add(depth, {}, top[1])
    layers = []
    width = len(names)
    for layer in rows[1:]:
        w = np.zeros((len(layer), width))
        for r, (weights, _) in enumerate(layer):
            for c, v in weights.items():
                w[r, c] = v
        layers.append(Layer(w, [b for _, b in layer]))
        width = len(layer)
    net = CastroNetwork(names, layers, crisp=is_crisp_params(layers))
    return net
