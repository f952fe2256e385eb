"""Acceptance criteria: each test records one PASS/FAIL line (shown in the run summary)."""
import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np

from lukasiewicz import regression
from lukasiewicz.automata import (DATA_DIR, bundled_automaton, enumerate_words, formula_to_automaton,
                                  io_dataset, load_word, run, transition_dataset)
from lukasiewicz.logic import (TruthValue, eval_numerators, exp_similarity, fusion, grid, meet,
                               negation, parse_formula, residuum, strong_sum, t_fusion,
                               truth_subtable)
from lukasiewicz.network import NeuronConfig, rule_r_expansions, translate_network, tree_table
from lukasiewicz.relations import FiniteView, conditional, project
from lukasiewicz.dataset import Dataset
from lukasiewicz.speckit import Commutative, automaton_model, bundled_spec, check, parse_spec
from lukasiewicz.trainer import (Problem, TrainConfig, get_params, random_network,
                                 representation_error, reverse_engineer, set_params,
                                 soft_crystallize)
from strategies import random_formula

RESULTS = []


def record(number, title, passed, detail, seconds, budget):
    passed = passed and seconds < budget
    line = (f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}: {detail} "
            f"[{seconds:.2f}s / {budget:g}s]")
    RESULTS.append(line)
    print(line)
    return passed


def formula_table(text, names, n=4):
    pts = grid(len(names), n)
    y = np.broadcast_to(eval_numerators(parse_formula(text), {a: pts[:, i] for i, a in
                                                              enumerate(names)}, n), (len(pts),))
    return Dataset.from_rows(names + ["out"], np.column_stack([pts, y]), n, inputs=names,
                             outputs=["out"])


def same_table(f, g, names, n):
    return np.array_equal(truth_subtable(f, n, names).numerators,
                          truth_subtable(g, n, names).numerators)


def test_criterion_01_neuron_table():
    t0 = time.perf_counter()
    item = regression.neuron_table()
    assert record(1, "two-input neuron table", item.passed, item.detail,
                  time.perf_counter() - t0, 1)


def test_criterion_02_rule_r_similarity():
    t0 = time.perf_counter()
    cfg = NeuronConfig((-1, 1, 1), 0)
    target = cfg.table(1)
    lams = [exp_similarity(target, truth_subtable(parse_formula(p), 1, ["x1", "x2", "x3"])
                           .numerators) for p in regression.RULE_R_REFERENCE]
    ok = all(abs(v - math.exp(-1 / 8)) < 1e-9 for v in lams)
    detail = f"{', '.join(f'{v:.9f}' for v in lams)} vs e^(-1/8) {math.exp(-1 / 8):.9f} (reference 0.883)"
    assert record(2, "rule R worked similarity", ok, detail, time.perf_counter() - t0, 1)


def test_criterion_03_representability_dichotomy():
    t0 = time.perf_counter()
    rep = NeuronConfig((-1, -1, 1), 2)
    tables = [tree_table(t, rep.names, 4).tobytes() for t in rule_r_expansions(rep)]
    equal = len(set(tables)) == 1 and len(tables) >= 2
    unrep = NeuronConfig((-1, 1, 1), 0)
    distinct = {tree_table(t, unrep.names, 4).tobytes() for t in rule_r_expansions(unrep)}
    ok = equal and len(distinct) >= 2
    detail = (f"psi_2(-x1,-x2,x3): {len(tables)} expansions, {len(set(tables))} table; "
              f"psi_0(-x1,x2,x3): {len(distinct)} distinct tables")
    assert record(3, "representability dichotomy", ok, detail, time.perf_counter() - t0, 1)


def test_criterion_04_cnn_approximation():
    t0 = time.perf_counter()
    net = regression.example_cnn()
    default = translate_network(net, 4)
    lams = {r.name: r.similarity for r in default.neurons}
    chosen = translate_network(net, 4, overrides={k: parse_formula(v) for k, v in
                                                  regression.EXAMPLE_CNN_CHOICES.items()})
    per = all(abs(lams[k] - v) <= 0.02 for k, v in regression.EXAMPLE_CNN_LAMBDAS.items())
    ok = per and abs(chosen.similarity - 0.7323) <= 0.02
    delta = default.similarity - chosen.similarity
    detail = (f"i1 {lams['i1']:.4f} i3 {lams['i3']:.4f} j1 {lams['j1']:.4f}, composite "
              f"{chosen.similarity:.4f} with the reference tied choices; default tie-break gives "
              f"{default.similarity:.4f} (delta {delta:+.4f}, locked)")
    assert abs(default.similarity - 0.950514) < 1e-6
    assert record(4, "un-representable CNN example", ok, detail, time.perf_counter() - t0, 30)


REFERENCE_TAIL = {  # reference vectors, including three erroneous entries
    11: [0, 0, Fraction(2, 3), 1, Fraction(1, 2), 1, 0, 1],
    12: [0, 1, 1, Fraction(1, 2), Fraction(1, 4), 1, Fraction(1, 2), 1],
    13: [0, 0, 1, Fraction(1, 4), 0, Fraction(1, 2), Fraction(3, 4), 1],
}


def test_criterion_05_automaton_trace():
    t0 = time.perf_counter()
    aut = bundled_automaton("example")
    word = load_word(DATA_DIR / "example_word.csv")
    res = run(aut, word, 4)
    seconds = time.perf_counter() - t0
    frac = lambda vec: [v.fraction for v in vec]
    reference_ok = all(frac(res.trace[k - 1]) == v for k, v in regression.TRACE.items())
    output_ok = frac(res.output) == regression.TRACE_OUTPUT
    # independent oracle: overwrite inputs, then e' = min(n, M1 e + M0 (n - e))
    n = 4
    e = np.array([v.numerator for v in res.trace[9]])
    oracle = {}
    for k in (11, 12, 13):
        e = np.minimum(n, aut.m1 @ e + aut.m0 @ (n - e))
        if k <= len(word):
            for idx, (state, sign) in zip(aut.input_indices, aut.inputs):
                e[idx] = int(word.value(k - 1, sign) * n)
        oracle[k] = [Fraction(int(v), n) for v in e]
    ours = {11: frac(res.trace[10]), 12: frac(res.trace[11]), 13: frac(res.final)}
    oracle_ok = ours == oracle
    typos = {k: [i + 1 for i, (a, b) in enumerate(zip(ours[k], REFERENCE_TAIL[k])) if a != b]
             for k in ours}
    ok = reference_ok and output_ok and oracle_ok and all(len(v) == 1 for v in typos.values())
    detail = (f"e2,e4-e10 exact {reference_ok}, output [1/2, 3/4, 1] {output_ok}, "
              f"e11-e13 equal step oracle {oracle_ok}; reference typos at entries {typos}")
    assert record(5, "automaton trace", ok, detail, seconds, 0.1)


def test_criterion_06_dataset_shapes():
    t0 = time.perf_counter()
    aut = bundled_automaton("acyclic")
    words = list(enumerate_words(4, 6))
    io = io_dataset(aut, words, 4).shape
    tr = transition_dataset(aut, words, 4).shape
    ok = len(words) == 15625 and io == (15625, 14) and tr == (15625, 16)
    assert record(6, "dataset shapes", ok, f"{len(words)} words, io {io}, transitions {tr}",
                  time.perf_counter() - t0, 5)


def _laws_hold(n):
    vals = [TruthValue(k, n) for k in range(n + 1)]
    one, zero = TruthValue(n, n), TruthValue(0, n)
    for x, y in itertools.product(vals, repeat=2):
        if not (fusion(x, y) == fusion(y, x) and fusion(one, x) == x and fusion(zero, x) == zero
                and meet(x, y) == fusion(x, residuum(x, y))
                and strong_sum(x, y) == negation(fusion(negation(x), negation(y)))
                and fusion(x, y) == negation(strong_sum(negation(x), negation(y)))):
            return False
        for z in vals:
            if fusion(fusion(x, y), z) != fusion(x, fusion(y, z)):
                return False
            if (fusion(x, y) <= z) != (x <= residuum(y, z)):
                return False
            if x <= y and not fusion(x, z) <= fusion(y, z):
                return False
    return all(negation(negation(x)) == x for x in vals)


def test_criterion_07_algebra_suite():
    t0 = time.perf_counter()
    laws = all(_laws_hold(n) for n in range(1, 7))
    rng = random.Random(7)
    d2, d3 = (0, 1), (0, 1, 2)
    bayes = True
    for _ in range(200):
        shell = FiniteView([("a", d2)], [("b", d3), ("c", d2)])
        r = FiniteView(shell.inputs, shell.outputs,
                       {t: Fraction(rng.randint(0, 4), 4) for t in shell.tuples()
                        if rng.random() < 0.6})
        for a in d2:
            mass, cond = project(r)(a), conditional(r, (a,))
            bayes &= all(t_fusion(mass, cond(*b)) == r(a, *b) for b in itertools.product(d3, d2))
    nrng = np.random.default_rng(7)
    trans = True
    for _ in range(1000):
        x, y, z = (nrng.integers(0, 5, size=9) / 4 for _ in range(3))
        trans &= max(0.0, exp_similarity(x, y) + exp_similarity(y, z) - 1) <= \
            exp_similarity(x, z) + 1e-12
    ok = laws and bayes and trans
    detail = (f"lattice laws on S_1..S_6 {laws}, Bayes identity on 200 views {bayes}, "
              f"similarity transitivity on 1000 triples {trans}")
    assert record(7, "algebra suite", ok, detail, time.perf_counter() - t0, 30)


def test_criterion_08_crystallization():
    t0 = time.perf_counter()
    ints = np.arange(-5.0, 6.0)
    fixed = all(np.array_equal(soft_crystallize(ints, k), ints) for k in (2, 4, 6))
    rng = np.random.default_rng(8)
    w = rng.uniform(-4, 4, 10_000)
    dist = lambda v: np.abs(v - np.round(v))
    shrinks = bool(np.all(dist(soft_crystallize(w)) <= dist(w) + 1e-12))
    # the unstable point frac = 1/2 repels at rate π/2, so a thin band around it
    # cannot settle in 20 steps; those parameters are excluded and counted
    band = 1e-3
    converged, excluded = 0, 0
    for seed in range(200):
        net = random_network(["x", "y", "z"], [4, 2], 1, np.random.default_rng(seed))
        p = get_params(net)
        frac = np.abs(p) - np.floor(np.abs(p))
        if np.any(np.abs(frac - 0.5) < band):
            excluded += 1
            continue
        for _ in range(20):
            p = soft_crystallize(p)
        converged += representation_error(set_params(net, p)) < 1e-6
    ok = fixed and shrinks and converged == 200 - excluded
    detail = (f"integer fixed points {fixed}, distance non-increasing on 1e4 weights {shrinks}, "
              f"{converged}/{200 - excluded} nets below 1e-6 after 20 steps "
              f"({excluded} excluded with |frac-1/2| < {band})")
    assert record(8, "crystallization", ok, detail, time.perf_counter() - t0, 5)


def test_criterion_09_end_to_end_extraction():
    t0 = time.perf_counter()
    results, slowest = [], 0.0
    for _, _, text in regression.NEURON_TABLE:
        t1 = time.perf_counter()
        f, lam, _ = reverse_engineer(formula_table(text, ["x", "y"]), TrainConfig(seed=42))
        slowest = max(slowest, time.perf_counter() - t1)
        results.append((text, lam == 1.0 and same_table(f, parse_formula(text), ["x", "y"], 4)))
    ok = all(r for _, r in results) and slowest < 120
    detail = (f"{sum(r for _, r in results)}/8 recovered exactly (slowest {slowest:.2f}s)"
              + "".join(f"; missed {t}" for t, r in results if not r))
    assert record(9, "end-to-end extraction", ok, detail, time.perf_counter() - t0, 8 * 120)


# reference theory, written over the transition columns (A0 holds a=1)
REFERENCE_T0 = {
    "A2_t1": "A0_t",
    "A3_t1": "~(~A0_t + A4_t)",
    "A4_t1": "~(~A2_t + A6_t)",
    "A5_t1": "~A3_t + A4_t + A6_t + ~A7_t",
    "A6_t1": "~A2_t",
    "A7_t1": "A6_t",
}


def test_criterion_10_theory_reproduction():
    t0 = time.perf_counter()
    aut = bundled_automaton("acyclic")
    data = transition_dataset(aut, enumerate_words(4, 6), 4)
    inputs = list(data.inputs)
    reference = {}
    for out, text in REFERENCE_T0.items():
        reference[out] = Problem.from_dataset(data, inputs, [out]).formula_similarity(
            parse_formula(text))
    f5, lam5, _ = reverse_engineer(data, TrainConfig(seed=42), output="A5_t1", inputs=inputs)
    structural = min(reference["A6_t1"], reference["A7_t1"])
    ok = abs(lam5 - 0.9747) <= 0.03 and structural >= 0.99
    detail = (f"extracted A5(t+1) = {f5} at lambda {lam5:.4f} (target 0.9747 +/- 0.03); "
              f"reference T0 lambdas " + ", ".join(f"{k[:2]} {v:.3f}" for k, v in reference.items()))
    assert record(10, "theory reproduction", ok, detail, time.perf_counter() - t0, 120)


def test_criterion_11_formula_injection():
    t0 = time.perf_counter()
    rng = random.Random(11)
    agree = 0
    for _ in range(100):
        f = random_formula(rng, ["x", "y", "z"], 3, lattice=True, constants=True)
        names = f.variables()
        pts = grid(len(names), 2)
        want = np.broadcast_to(eval_numerators(f, {v: pts[:, i] for i, v in enumerate(names)}, 2),
                               (len(pts),))
        agree += np.array_equal(formula_to_automaton(f).evaluate_grid(pts, 2), want)
    example = formula_to_automaton(parse_formula("((a * b) + c) -> d"))
    ok = agree == 100 and example.iterations == 4
    detail = f"{agree}/100 random formulas agree on S_2, example settles after {example.iterations} iterations"
    assert record(11, "formula to automaton", ok, detail, time.perf_counter() - t0, 30)


def test_criterion_12_spec_round_trip():
    t0 = time.perf_counter()
    spec = bundled_spec()
    text = spec.to_text()
    again = parse_spec(text)
    round_trip = again == spec and again.to_text() == text
    model = automaton_model(bundled_automaton("acyclic"), bundled_automaton("cyclic"))
    report = check(spec, model)
    comm = [r for r, m in zip(report.results, spec.marks) if isinstance(m, Commutative)]
    evaluated = len(comm) == 4 and all(r.value is not None for r in comm)
    detail = (f"round trip {round_trip}, {len(report.results)} marks evaluated; commutativity "
              + ", ".join(f"{r.mark} {r.value:.3f} {r.status}" for r in comm))
    assert record(12, "specification round trip", round_trip and evaluated, detail,
                  time.perf_counter() - t0, 60)
