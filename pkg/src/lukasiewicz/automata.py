"""Ω-automata: boolean transition graphs propagating Łukasiewicz truth values.

A state vector e evolves by e' = M1(e) ⊕ M0(¬e): every destination takes the
bounded sum of its 1-labelled sources and of the negations of its 0-labelled
sources.  Input states carry no incoming edges; before each propagation they
are overwritten with the truth values of their signs at the current word
position.  All arithmetic runs on integer numerators over a common resolution.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .dataset import Dataset
from .logic import (Formula, Fusion, Implies, Join, Meet, Neg, One, StrongSum, TruthValue, Var,
                    Zero, parse_fraction)

log = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"


class AutomatonError(ValueError):
    pass


def _lcm_resolution(values: Iterable[Fraction]) -> int:
    n = 1
    for v in values:
        n = n * v.denominator // np.gcd(n, v.denominator)
    return int(n)


@dataclass(frozen=True)
class OmegaAutomaton:
    states: tuple[str, ...]
    inputs: tuple[tuple[str, str], ...]  # (state, sign) pairs
    outputs: tuple[str, ...]
    m0: np.ndarray  # rows = destination, cols = source
    m1: np.ndarray
    init: tuple[Fraction, ...]

    def __post_init__(self):
        k = len(self.states)
        if len(set(self.states)) != k:
            raise AutomatonError("duplicate state name")
        for m in (self.m0, self.m1):
            if m.shape != (k, k) or not np.isin(m, (0, 1)).all():
                raise AutomatonError("transition matrices must be square 0/1 matrices")
        if len(self.init) != k:
            raise AutomatonError(f"init has {len(self.init)} values for {k} states")
        if any(not 0 <= v <= 1 for v in self.init):
            raise AutomatonError("init values must lie in [0, 1]")
        for s in self.input_states + list(self.outputs):
            if s not in self.states:
                raise AutomatonError(f"unknown state {s!r}")
        idx = self.input_indices
        if (self.m0[idx].any() or self.m1[idx].any()):
            raise AutomatonError("input states cannot have incoming edges")
        if set(self.outputs) & set(self.input_states):
            log.warning("output states %s are also input states",
                        sorted(set(self.outputs) & set(self.input_states)))

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def input_states(self) -> list[str]:
        return [s for s, _ in self.inputs]

    @property
    def input_indices(self) -> list[int]:
        return [self.states.index(s) for s, _ in self.inputs]

    @property
    def output_indices(self) -> list[int]:
        return [self.states.index(s) for s in self.outputs]

    @property
    def signs(self) -> list[str]:
        return list(dict.fromkeys(sign for _, sign in self.inputs))

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise AutomatonError(f"unknown state {state!r}") from None

    def edges(self) -> list[tuple[str, str, int]]:
        out = []
        for label, m in ((0, self.m0), (1, self.m1)):
            for d, s in zip(*np.nonzero(m)):
                out.append((self.states[s], self.states[d], label))
        order = {s: i for i, s in enumerate(self.states)}
        return sorted(out, key=lambda e: (order[e[0]], order[e[1]], e[2]))

    def to_text(self) -> str:
        lines = [f"states: {' '.join(self.states)}",
                 "inputs: " + " ".join(f'{s}="{sign}"' for s, sign in self.inputs),
                 f"outputs: {' '.join(self.outputs)}",
                 "init: " + " ".join(_fmt(v) for v in self.init)]
        lines += [f"{s} -> {d} : {label}" for s, d, label in self.edges()]
        return "\n".join(lines) + "\n"


_INPUT_RE = re.compile(r'(\S+?)\s*=\s*"([^"]*)"')


def parse_automaton(text: str) -> OmegaAutomaton:
    """Read the ``states: / inputs: / outputs: / init: / src -> dst : 0|1`` format."""
    header: dict[str, tuple[int, str]] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            m = re.fullmatch(r"(\S+)\s*->\s*(\S+)\s*:\s*(\S+)", line)
            if not m or m.group(3) not in ("0", "1"):
                raise AutomatonError(f"line {lineno}: expected 'src -> dst : 0|1'")
            edges.append((lineno, m.group(1), m.group(2), int(m.group(3))))
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in ("states", "inputs", "outputs", "init"):
            raise AutomatonError(f"line {lineno}: unrecognised line {raw.strip()!r}")
        if key in header:
            raise AutomatonError(f"line {lineno}: repeated '{key}:'")
        header[key] = (lineno, value.strip())
    if "states" not in header:
        raise AutomatonError("missing 'states:' line")
    lineno, value = header["states"]
    states = value.split()
    if len(set(states)) != len(states):
        dup = next(s for s in states if states.count(s) > 1)
        raise AutomatonError(f"line {lineno}: duplicate state name {dup!r}")
    where = {s: i for i, s in enumerate(states)}

    def known(name, ln):
        if name not in where:
            raise AutomatonError(f"line {ln}: unknown state {name!r}")
        return where[name]

    inputs = []
    if "inputs" in header:
        ln, value = header["inputs"]
        rest = _INPUT_RE.sub("", value).strip()
        if rest:
            raise AutomatonError(f"line {ln}: expected state=\"sign\" pairs, got {rest!r}")
        for s, sign in _INPUT_RE.findall(value):
            known(s, ln)
            inputs.append((s, sign))
    outputs = []
    if "outputs" in header:
        ln, value = header["outputs"]
        outputs = value.split()
        for s in outputs:
            known(s, ln)
    k = len(states)
    init = (Fraction(0),) * k
    if "init" in header:
        ln, value = header["init"]
        try:
            init = tuple(parse_fraction(v) for v in value.split())
        except ValueError as err:
            raise AutomatonError(f"line {ln}: {err}") from None
        if len(init) != k:
            raise AutomatonError(f"line {ln}: init has {len(init)} values for {k} states")
    m0 = np.zeros((k, k), dtype=np.int64)
    m1 = np.zeros((k, k), dtype=np.int64)
    inp = {s for s, _ in inputs}
    for ln, src, dst, label in edges:
        s, d = known(src, ln), known(dst, ln)
        if dst in inp:
            raise AutomatonError(f"line {ln}: input state {dst!r} cannot have incoming edges")
        (m1 if label else m0)[d, s] = 1
    try:
        return OmegaAutomaton(tuple(states), tuple(inputs), tuple(outputs), m0, m1, init)
    except AutomatonError as err:
        raise AutomatonError(f"invalid automaton: {err}") from None


def load_automaton(path: str | Path) -> OmegaAutomaton:
    return parse_automaton(Path(path).read_text(encoding="utf-8"))


def bundled_automaton(name: str) -> OmegaAutomaton:
    """One of the shipped automata: ``example``, ``acyclic`` or ``cyclic``."""
    return load_automaton(DATA_DIR / f"{name}.aut")


# ---------------------------------------------------------------------------
# words


@dataclass(frozen=True)
class FuzzyWord:
    """Sequence of positions, each mapping a sign to its truth value (absent = 0)."""

    positions: tuple[Mapping[str, Fraction], ...]

    @classmethod
    def of(cls, positions: Iterable[Mapping[str, object]]) -> "FuzzyWord":
        out = []
        for pos in positions:
            vals = {k: Fraction(v) if not isinstance(v, str) else parse_fraction(v)
                    for k, v in pos.items()}
            if any(not 0 <= v <= 1 for v in vals.values()):
                raise AutomatonError("sign values must lie in [0, 1]")
            out.append(vals)
        return cls(tuple(out))

    def __len__(self):
        return len(self.positions)

    def value(self, k: int, sign: str) -> Fraction:
        return self.positions[k].get(sign, Fraction(0))

    @property
    def signs(self) -> list[str]:
        return list(dict.fromkeys(s for pos in self.positions for s in pos))

    def resolution(self) -> int:
        return _lcm_resolution(v for pos in self.positions for v in pos.values())

    def to_csv_text(self, signs: Sequence[str] | None = None) -> str:
        signs = list(signs or self.signs)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(signs)
        for k in range(len(self)):
            w.writerow([_fmt(self.value(k, s)) for s in signs])
        return buf.getvalue()


def _fmt(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def parse_word(text: str) -> FuzzyWord:
    """Word CSV: one column per sign, one row per position."""
    rows = [r for r in csv.reader(ln for ln in text.splitlines()
                                  if ln.strip() and not ln.lstrip().startswith("#"))]
    if not rows:
        raise AutomatonError("empty word file")
    header = [h.strip() for h in rows[0]]
    positions = []
    for lineno, rec in enumerate(rows[1:], 2):
        if len(rec) != len(header):
            raise AutomatonError(f"word row {lineno}: expected {len(header)} fields")
        try:
            positions.append({h: parse_fraction(v) for h, v in zip(header, rec)})
        except ValueError as err:
            raise AutomatonError(f"word row {lineno}: {err}") from None
    return FuzzyWord.of(positions)


def load_word(path: str | Path) -> FuzzyWord:
    return parse_word(Path(path).read_text(encoding="utf-8"))


def enumerate_words(n: int, length: int, attribute: str = "a") -> Iterator[FuzzyWord]:
    """All words over S_n of the given length with ``a=0`` the negation of ``a=1``.

    Words come in lexicographic order of the ``a=1`` values.
    """
    if n < 1 or length < 1:
        raise AutomatonError("n and length must be at least 1")
    one, zero = f"{attribute}=1", f"{attribute}=0"
    for ks in itertools.product(range(n + 1), repeat=length):
        yield FuzzyWord(tuple({one: Fraction(k, n), zero: Fraction(n - k, n)} for k in ks))


def word_array(aut: OmegaAutomaton, words: Sequence[FuzzyWord], n: int) -> np.ndarray:
    """Numerators of every input state per word and position: shape (words, length, inputs)."""
    if not words:
        return np.zeros((0, 0, len(aut.inputs)), dtype=np.int64)
    length = len(words[0])
    if any(len(w) != length for w in words):
        raise AutomatonError("all words must have the same length")
    known = set(aut.signs)
    out = np.zeros((len(words), length, len(aut.inputs)), dtype=np.int64)
    for i, w in enumerate(words):
        for k, pos in enumerate(w.positions):
            for sign in pos:
                if sign not in known:
                    raise AutomatonError(f"unknown sign {sign!r}")
            for j, (_, sign) in enumerate(aut.inputs):
                v = pos.get(sign, Fraction(0)) * n
                if v.denominator != 1:
                    raise AutomatonError(f"sign value {pos.get(sign)} is not in S_{n}")
                out[i, k, j] = int(v)
    return out


# ---------------------------------------------------------------------------
# execution


def _init_numerators(aut: OmegaAutomaton, n: int) -> np.ndarray:
    out = []
    for v in aut.init:
        k = v * n
        if k.denominator != 1:
            raise AutomatonError(f"initial value {v} is not in S_{n}")
        out.append(int(k))
    return np.array(out, dtype=np.int64)


def propagate(aut: OmegaAutomaton, e: np.ndarray, n: int) -> np.ndarray:
    """e' = M1(e) ⊕ M0(¬e) on numerators; ``e`` may be a batch (rows = vectors)."""
    return np.minimum(n, e @ aut.m1.T + (n - e) @ aut.m0.T)


def _overwrite(aut: OmegaAutomaton, e: np.ndarray, signs: np.ndarray) -> np.ndarray:
    e = e.copy()
    e[..., aut.input_indices] = signs
    return e


def step(aut: OmegaAutomaton, e: Sequence, position: Mapping[str, object] | None, n: int
         ) -> list[TruthValue]:
    """Overwrite the input states with ``position`` and propagate once."""
    vec = np.array([TruthValue.of(v.fraction if isinstance(v, TruthValue) else v, n).numerator
                    for v in e], dtype=np.int64)
    if len(vec) != aut.size:
        raise AutomatonError(f"state vector has {len(vec)} entries for {aut.size} states")
    if position is not None:
        word = FuzzyWord.of([position])
        vec = _overwrite(aut, vec, word_array(aut, [word], n)[0, 0])
    return [TruthValue(int(k), n) for k in propagate(aut, vec, n)]


@dataclass
class RunResult:
    n: int
    trace: list[list[TruthValue]]  # post-overwrite vectors e_1 .. e_L
    final: list[TruthValue]  # after the last propagation
    output: list[TruthValue]


def run(aut: OmegaAutomaton, word: FuzzyWord, n: int | None = None) -> RunResult:
    if n is None:
        n = _lcm_resolution(list(aut.init) + [v for p in word.positions for v in p.values()])
    trace, final = run_batch(aut, word_array(aut, [word], n), n)
    to_tv = lambda row: [TruthValue(int(k), n) for k in row]  # noqa: E731
    fin = to_tv(final[0])
    return RunResult(n, [to_tv(trace[0, k]) for k in range(trace.shape[1])], fin,
                     [fin[i] for i in aut.output_indices])


def run_batch(aut: OmegaAutomaton, signs: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Run many equal-length words at once.

    ``signs`` has shape (words, length, inputs).  Returns the post-overwrite
    traces (words, length, states) and the final vectors (words, states).
    """
    words, length, _ = signs.shape
    e = np.tile(_init_numerators(aut, n), (words, 1))
    trace = np.zeros((words, length, aut.size), dtype=np.int64)
    for k in range(length):
        e = _overwrite(aut, e, signs[:, k])
        trace[:, k] = e
        e = propagate(aut, e, n)
    return trace, e


# ---------------------------------------------------------------------------
# datasets


def _value_attribute(aut: OmegaAutomaton) -> tuple[str, int]:
    """The ``attr=1`` sign whose per-position values become dataset columns."""
    for j, (_, sign) in enumerate(aut.inputs):
        if sign.endswith("=1"):
            return sign[:-2], j
    raise AutomatonError("the automaton has no 'attr=1' input sign")


def io_dataset(aut: OmegaAutomaton, words: Iterable[FuzzyWord], n: int) -> Dataset:
    """One row per word: the ``attr=1`` value at positions s1..sL, then the final states."""
    words = list(words)
    signs = word_array(aut, words, n)
    _, final = run_batch(aut, signs, n)
    _, j = _value_attribute(aut)
    length = signs.shape[1]
    pos_cols = [f"s{k + 1}" for k in range(length)]
    cols = pos_cols + list(aut.states)
    data = np.concatenate([signs[:, :, j], final], axis=1)
    return Dataset(_keys(len(words)), cols, data, n, pos_cols, list(aut.states))


def transition_dataset(aut: OmegaAutomaton, words: Iterable[FuzzyWord], n: int,
                       k: int | None = None) -> Dataset:
    """One row per word: the post-overwrite state at iteration k and its successor."""
    words = list(words)
    signs = word_array(aut, words, n)
    trace, final = run_batch(aut, signs, n)
    length = signs.shape[1]
    k = length if k is None else k
    if not 1 <= k <= length:
        raise AutomatonError(f"iteration {k} is outside 1..{length}")
    now = trace[:, k - 1]
    nxt = propagate(aut, now, n)
    cur = [f"{s}_t" for s in aut.states]
    succ = [f"{s}_t1" for s in aut.states]
    return Dataset(_keys(len(words)), cur + succ, np.concatenate([now, nxt], axis=1), n, cur, succ)


def _keys(count: int) -> list[str]:
    width = len(str(max(count - 1, 0)))
    return [f"w{i:0{width}d}" for i in range(count)]


# ---------------------------------------------------------------------------
# formulas as automata


def _sum_form(f: Formula):
    """Rewrite into nested ⊕/¬ nodes: ('var', x) | ('zero',) | ('not', g) | ('sum', [g...])."""
    if isinstance(f, Var):
        return ("var", f.name)
    if isinstance(f, Zero):
        return ("zero",)
    if isinstance(f, One):
        return _neg(("zero",))
    if isinstance(f, Neg):
        return _neg(_sum_form(f.child))
    a, b = _sum_form(f.left), _sum_form(f.right)
    if isinstance(f, StrongSum):
        return _plus(a, b)
    if isinstance(f, Fusion):
        return _neg(_plus(_neg(a), _neg(b)))
    if isinstance(f, Implies):
        return _plus(_neg(a), b)
    if isinstance(f, Meet):  # a ⊗ (¬a ⊕ b)
        return _neg(_plus(_neg(a), _neg(_plus(_neg(a), b))))
    if isinstance(f, Join):  # (a ⇒ b) ⇒ b
        return _plus(_neg(_plus(_neg(a), b)), b)
    raise AutomatonError(f"unsupported formula node {type(f).__name__}")


def _neg(g):
    return g[1] if g[0] == "not" else ("not", g)


def _plus(a, b):
    parts = (list(a[1]) if a[0] == "sum" else [a]) + (list(b[1]) if b[0] == "sum" else [b])
    return ("sum", tuple(parts))


def _height(g) -> int:
    if g[0] in ("var", "zero"):
        return 1
    if g[0] == "not":
        return _height(g[1]) if g[1][0] == "zero" else _height(g[1]) + 1
    return 1 + max(_height(c[1] if c[0] == "not" else c) for c in g[1])


@dataclass
class CompiledFormula:
    automaton: OmegaAutomaton
    iterations: int
    output: str
    variables: list[str]

    def word(self, assignment: Mapping[str, object]) -> FuzzyWord:
        """First position carries the variable values, the remaining ones are all zero."""
        first = {f"{v}=1": assignment[v] for v in self.variables}
        rest = [{f"{v}=1": 0 for v in self.variables} for _ in range(self.iterations - 1)]
        return FuzzyWord.of([first] + rest)

    def evaluate(self, assignment: Mapping[str, object], n: int) -> TruthValue:
        res = run(self.automaton, self.word(assignment), n)
        return res.final[self.automaton.index(self.output)]

    def evaluate_grid(self, points: np.ndarray, n: int) -> np.ndarray:
        """Output numerators for every row of ``points`` (numerators, one column per variable)."""
        aut = self.automaton
        signs = np.zeros((len(points), self.iterations, len(aut.inputs)), dtype=np.int64)
        signs[:, 0, :] = points
        _, final = run_batch(aut, signs, n)
        return final[:, aut.index(self.output)]


def formula_to_automaton(f: Formula, output: str = "E") -> CompiledFormula:
    """Automaton whose ``output`` state holds f after ``height`` iterations.

    Each variable has an input state (sign ``x=1``) copied into a level-1
    state; every ⊕ node is a state at its tree level fed by 1-edges from its
    positive parts and 0-edges from its negated parts; shorter branches are
    delayed by chains of 1-edges.  ¬ of a ⊕ node at the root becomes a single
    0-edge into the output state.
    """
    g = _sum_form(f)
    variables = f.variables()
    names: list[str] = list(variables)
    if output in names:
        output = output + "_"
    m0_edges: list[tuple[int, int]] = []
    m1_edges: list[tuple[int, int]] = []
    counter = itertools.count(1)
    chain: dict[tuple, int] = {}

    def new_state(name: str | None = None) -> int:
        if name is None:
            name = f"_{next(counter)}"
            while name in names or name == output:
                name = f"_{next(counter)}"
        names.append(name)
        return len(names) - 1

    zero_state: list[int] = []

    def zero() -> int:
        if not zero_state:
            zero_state.append(new_state())
        return zero_state[0]

    def at_level(node, level: int) -> int:
        """State holding ``node`` (a var or ⊕ node) after ``level`` propagations."""
        key = (node, level)
        if key in chain:
            return chain[key]
        if node[0] == "var":
            src = variables.index(node[1]) if level == 1 else at_level(node, level - 1)
            s = new_state()
            m1_edges.append((s, src))
        elif _height(node) == level:
            s = new_state()
            feed(s, node, level)
        else:
            s = new_state()
            m1_edges.append((s, at_level(node, level - 1)))
        chain[key] = s
        return s

    def fresh(node, level: int) -> int:
        """An unshared state holding ``node`` at ``level`` (for repeated operands)."""
        s = new_state()
        if node[0] == "var" and level == 1:
            m1_edges.append((s, variables.index(node[1])))
        elif node[0] == "sum" and _height(node) == level:
            feed(s, node, level)
        else:
            m1_edges.append((s, at_level(node, level - 1)))
        return s

    def feed(s: int, node, level: int):
        used = set()
        for part in node[1]:
            neg = part[0] == "not"
            base = part[1] if neg else part
            if base[0] == "zero":
                if neg:  # ⊕ 1 saturates
                    m0_edges.append((s, zero()))
                continue
            # a boolean edge cannot count twice, so repeats go through their own state
            src = at_level(base, level - 1) if (base, neg) not in used else fresh(base, level - 1)
            used.add((base, neg))
            (m0_edges if neg else m1_edges).append((s, src))

    height = _height(g)
    if g[0] == "var":
        out = at_level(g, 1)
    elif g[0] == "zero":
        out = new_state()
    elif g[0] == "not" and g[1][0] == "zero":
        out = new_state()
        m0_edges.append((out, zero()))
    elif g[0] == "not":
        out = new_state()
        m0_edges.append((out, at_level(g[1], height - 1)))
    else:
        out = at_level(g, height)
    names[out] = output
    k = len(names)
    m0 = np.zeros((k, k), dtype=np.int64)
    m1 = np.zeros((k, k), dtype=np.int64)
    for d, s in m0_edges:
        m0[d, s] = 1
    for d, s in m1_edges:
        m1[d, s] = 1
    aut = OmegaAutomaton(tuple(names), tuple((v, f"{v}=1") for v in variables), (output,),
                         m0, m1, (Fraction(0),) * k)
    return CompiledFormula(aut, height, output, list(variables))
