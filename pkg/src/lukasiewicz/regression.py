"""Regression suite over fixed reference values (used by ``repro-paper``)."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .automata import DATA_DIR, bundled_automaton, enumerate_words, io_dataset, load_word, run, \
    transition_dataset
from .logic import exp_similarity, parse_formula, truth_subtable
from .network import (CastroNetwork, NeuronConfig, neuron_to_formula, rule_r_expansions,
                      translate_network, tree_table)

# two-input neurons (weights, bias) and the formula each one computes
NEURON_TABLE = [
    ((-1, 1), 1, "~x + y"), ((1, -1), 0, "x * ~y"), ((1, 1), 0, "x + y"),
    ((-1, -1), 1, "~x * ~y"), ((1, -1), 1, "x + ~y"), ((1, 1), -1, "x * y"),
    ((-1, 1), 0, "~x * y"), ((-1, -1), 2, "~x + ~y"),
]

# seven inputs, three hidden units, one output
EXAMPLE_CNN = [
    ([[-1, 1, -1, 1, 0, -1, 0], [0, 0, 0, 1, 1, 0, -1], [1, 1, 0, 0, 0, 0, -1]], [0, 1, 0]),
    ([[1, -1, 1]], [0]),
]
EXAMPLE_CNN_CHOICES = {(0, 0): "((~A1 * A4) + A2) * ~A3 * ~A6",
                       (0, 2): "(A1 + ~A7) * A2",
                       (1, 0): "(i1 * ~i2) + i3"}
EXAMPLE_CNN_LAMBDAS = {"i1": 0.9387, "i3": 0.8781, "j1": 0.8781}
EXAMPLE_CNN_COMPOSITE = 0.7323

RULE_R_REFERENCE = ["x3 + ~x1 * x2", "x3 * (~x1 + x2)", "~x1 * (x2 + x3)"]
RULE_R_LAMBDA = 0.883

_H, _Q, _T = Fraction(1, 2), Fraction(1, 4), Fraction(3, 4)
# post-overwrite state vectors of the bundled example run, by iteration
TRACE = {
    2: [1, 0, 0, 1, 1, _H, 1, _H],
    4: [0, 1, _H, 1, 1, 1, _H, 1],
    5: [_Q, _T, 1, 1, _H, 1, 0, 1],
    6: [_H, _H, _T, _T, 0, 1, _H, 1],
    7: [1, 0, _H, _H, _Q, _T, 1, 1],
    8: [1, 0, 0, 1, _T, _H, _T, _T],
    9: [_H, _H, 0, 1, 1, 1, _H, _H],
    10: [_Q, _T, _H, 1, 1, 1, _H, 1],
}
TRACE_OUTPUT = [_H, _T, 1]


def example_cnn() -> CastroNetwork:
    return CastroNetwork.from_lists([f"A{i}" for i in range(1, 8)], EXAMPLE_CNN)


@dataclass
class Item:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<34} {self.detail}  ({self.seconds:.2f}s)"


def neuron_table() -> Item:
    bad = []
    for w, b, text in NEURON_TABLE:
        cfg = NeuronConfig(w, b, ("x", "y"))
        f = parse_formula(text)
        same = neuron_to_formula(cfg) == f and all(
            np.array_equal(cfg.table(n), truth_subtable(f, n, ["x", "y"]).numerators)
            for n in (1, 2, 4))
        if not same:
            bad.append(text)
    return Item("neuron table", not bad, f"{8 - len(bad)}/8 configurations match"
                + (f"; mismatches {bad}" if bad else ""))


def rule_r_similarity() -> Item:
    cfg = NeuronConfig((-1, 1, 1), 0)
    names = ["x1", "x2", "x3"]
    table = cfg.table(1)
    lams = []
    for text in RULE_R_REFERENCE:
        f = parse_formula(text)
        lams.append(exp_similarity(table / 1, truth_subtable(f, 1, names).numerators / 1))
    target = math.exp(-1 / 8)
    ok = all(abs(v - target) < 1e-9 for v in lams) and abs(target - RULE_R_LAMBDA) < 6e-4
    expansions = {tree_table(t, cfg.names, 1).tobytes() for t in rule_r_expansions(cfg)}
    ok = ok and len(expansions) >= 2
    return Item("rule R similarity", ok,
                f"lambda {lams[0]:.6f} (reference {RULE_R_LAMBDA}), "
                f"{len(expansions)} distinct expansions")


def cnn_composite() -> Item:
    net = example_cnn()
    default = translate_network(net, 4)
    lams = {r.name: r.similarity for r in default.neurons}
    per = all(abs(lams[k] - v) <= 0.02 for k, v in EXAMPLE_CNN_LAMBDAS.items())
    chosen = translate_network(net, 4, overrides={k: parse_formula(v)
                                                  for k, v in EXAMPLE_CNN_CHOICES.items()})
    ok = per and abs(chosen.similarity - EXAMPLE_CNN_COMPOSITE) <= 0.02
    return Item("CNN approximation", ok,
                f"i1 {lams['i1']:.4f} i3 {lams['i3']:.4f} j1 {lams['j1']:.4f} composite "
                f"{chosen.similarity:.4f} (default tie-break {default.similarity:.4f})")


def automaton_trace() -> Item:
    res = run(bundled_automaton("example"), load_word(DATA_DIR / "example_word.csv"), 4)
    bad = [k for k, vec in TRACE.items() if [v.fraction for v in res.trace[k - 1]] != vec]
    out = [v.fraction for v in res.output]
    ok = not bad and out == TRACE_OUTPUT
    return Item("automaton trace", ok,
                f"output [{', '.join(map(str, out))}]" + (f"; mismatched steps {bad}" if bad else ""))


def dataset_shapes() -> Item:
    aut = bundled_automaton("acyclic")
    words = list(enumerate_words(4, 6))
    io = io_dataset(aut, words, 4).shape
    tr = transition_dataset(aut, words, 4).shape
    ok = io == (15625, 14) and tr == (15625, 16)
    return Item("dataset shapes", ok, f"io {io[0]}x{io[1]}, transitions {tr[0]}x{tr[1]}")


SUITE: list[Callable[[], Item]] = [neuron_table, rule_r_similarity, cnn_composite,
                                   automaton_trace, dataset_shapes]


def run_suite() -> list[Item]:
    items = []
    for check in SUITE:
        t0 = time.perf_counter()
        try:
            item = check()
        except Exception as err:  # report, keep going
            item = Item(check.__name__.replace("_", " "), False, f"error: {err}")
        item.seconds = time.perf_counter() - t0
        items.append(item)
    return items
