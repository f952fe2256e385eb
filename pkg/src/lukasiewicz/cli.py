"""Command-line front end.

Exit codes: 0 success, 1 a check or λ threshold failed, 2 usage or invalid input,
3 file I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import automata, regression, speckit
from .dataset import read_dataset
from .logic import SIMILARITY_MODES, eval_numerators, parse_formula, similarity, to_text
from .network import (NeuronConfig, approximation_candidates, classify_neuron, formula_to_network,
                      is_representable, neuron_to_formula, NeuronClass, constant_formula)
from .trainer import TrainConfig, parse_schedule, reverse_engineer, save_report

OK, FAILED, USAGE, IO_ERROR = 0, 1, 2, 3


def _resolution(logic: int) -> int:
    """``--logic m`` selects the m-valued chain S_(m-1)."""
    if logic < 2:
        raise ValueError("--logic needs at least 2 truth values")
    return logic - 1


def _automaton(spec: str) -> automata.OmegaAutomaton:
    path = Path(spec)
    if path.exists():
        return automata.load_automaton(path)
    if (automata.DATA_DIR / f"{spec}.aut").exists():
        return automata.bundled_automaton(spec)
    raise FileNotFoundError(f"no automaton file or bundled automaton named {spec!r}")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_data(args) -> int:
    aut = _automaton(args.automaton)
    n = _resolution(args.logic)
    words = automata.enumerate_words(n, args.length)
    if args.kind == "io":
        data = automata.io_dataset(aut, words, n)
    else:
        data = automata.transition_dataset(aut, words, n, args.step)
    if args.out:
        data.write(args.out)
        print(f"wrote {len(data)} rows x {len(data.columns)} attributes to {args.out}")
    else:
        sys.stdout.write(data.to_csv_text())
    return OK


def cmd_extract(args) -> int:
    overrides = dict(seed=args.seed, jobs=args.jobs, tau=args.tau, restarts=args.restarts,
                     schedule=parse_schedule(args.schedule) if args.schedule else None)
    cfg = (TrainConfig.from_file(args.config, **overrides) if args.config
           else TrainConfig(**{k: v for k, v in overrides.items() if v is not None}))
    data = read_dataset(args.data, _resolution(args.logic) if args.logic else None)
    inputs = args.inputs.split(",") if args.inputs else None
    if inputs is None and args.output and not data.inputs:
        inputs = [c for c in data.columns if c != args.output]
    f, lam, report = reverse_engineer(data, cfg, output=args.output, inputs=inputs)
    report_path = Path(args.report or Path(args.data).with_suffix(".report.json"))
    save_report(report, report_path)
    print(f"formula {to_text(f)}")
    print(f"lambda  {lam:.6f}")
    print(f"report  {report_path}")
    return OK if lam >= cfg.tau else FAILED


def cmd_eval(args) -> int:
    f = parse_formula(args.formula)
    data = read_dataset(args.data, _resolution(args.logic) if args.logic else None)
    missing = [v for v in f.variables() if v not in data.columns]
    if missing:
        raise ValueError(f"formula variables {missing} are not columns of {args.data}")
    out = args.output
    if out is None:
        rest = [c for c in (data.outputs or data.columns) if c not in f.variables()]
        if len(rest) != 1:
            raise ValueError("name the target column with --output")
        out = rest[-1]
    env = {v: data.numerators[:, data.index(v)] for v in f.variables()}
    got = np.broadcast_to(eval_numerators(f, env, data.n), (len(data),))
    lam = similarity(got / data.n, data.column(out), args.similarity)
    print(f"lambda {lam:.6f}")
    return OK if lam >= args.threshold else FAILED


def cmd_run_automaton(args) -> int:
    aut = _automaton(args.automaton)
    word = automata.load_word(args.word)
    n = _resolution(args.logic) if args.logic else None
    res = automata.run(aut, word, n)
    fmt = lambda vec: "[" + ", ".join(str(v) for v in vec) + "]"
    lines = [f"states {' '.join(aut.states)}"]
    lines += [f"e{k + 1:<3} {fmt(vec)}" for k, vec in enumerate(res.trace)]
    lines += [f"final {fmt(res.final)}", f"output {fmt(res.output)}"]
    _emit("\n".join(lines) + "\n", args.out)
    return OK


def cmd_approx(args) -> int:
    weights = tuple(int(w) for w in args.weights.split(","))
    names = tuple(args.names.split(",")) if args.names else None
    cfg = NeuronConfig(weights, args.bias, names) if names else NeuronConfig(weights, args.bias)
    n = _resolution(args.logic)
    kind = classify_neuron(cfg)
    print(f"neuron {cfg}  {kind.value}")
    if is_representable(cfg):
        f = (constant_formula(cfg) if kind in (NeuronClass.CONSTANT0, NeuronClass.CONSTANT1)
             else neuron_to_formula(cfg))
        print(f"1.000000  {to_text(f)}")
        return OK
    for f, lam in approximation_candidates(cfg, n)[:args.top]:
        print(f"{lam:.6f}  {to_text(f)}")
    return OK


def cmd_check_spec(args) -> int:
    spec = speckit.load_spec(args.spec) if args.spec else speckit.bundled_spec()
    if args.model:
        model = speckit.load_model(args.model)
    else:
        a, b = args.automata.split(",")
        model = speckit.automaton_model(_automaton(a), _automaton(b),
                                        _resolution(args.logic), args.length)
    report = speckit.check(spec, model, args.similarity, args.partial)
    print(report.to_text())
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), indent=1) + "\n", encoding="utf-8")
    return OK if report.passed else FAILED


def cmd_compile_formula(args) -> int:
    f = parse_formula(args.formula)
    if args.target == "automaton":
        compiled = automata.formula_to_automaton(f)
        text = (f"# output {compiled.output} after {compiled.iterations} iterations\n"
                + compiled.automaton.to_text())
    else:
        text = json.dumps(formula_to_network(f).to_json(), indent=1) + "\n"
    _emit(text, args.out)
    return OK


def cmd_repro_paper(args) -> int:
    items = regression.run_suite()
    for item in items:
        print(item.line())
    passed = sum(i.passed for i in items)
    print(f"{passed}/{len(items)} passed")
    return OK if passed == len(items) else FAILED


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lukasiewicz",
                                description="Łukasiewicz logic, neural rule extraction and "
                                            "Ω-automata tools")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def logic(sp, default=None):
        sp.add_argument("--logic", type=int, default=default,
                        help="number of truth values m (the chain S_(m-1))")

    g = sub.add_parser("gen-data", help="enumerate words and write an automaton dataset")
    g.add_argument("--automaton", required=True, help="automaton file or bundled name")
    g.add_argument("--kind", choices=("io", "transitions"), default="io")
    g.add_argument("--length", type=int, default=6)
    g.add_argument("--step", type=int, default=None, help="transition index (default: last)")
    logic(g, 5)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_data)

    e = sub.add_parser("extract", help="reverse engineer a formula from a dataset")
    e.add_argument("--data", required=True)
    e.add_argument("--output", help="target column (default: first declared output)")
    e.add_argument("--inputs", help="comma separated input columns")
    e.add_argument("--config", help="key=value training configuration file")
    e.add_argument("--seed", type=int)
    e.add_argument("--jobs", type=int)
    e.add_argument("--tau", type=float)
    e.add_argument("--restarts", type=int)
    e.add_argument("--schedule", help="hidden layer ladder such as '2;4;4,2'")
    e.add_argument("--report", help="JSON report path")
    logic(e)
    e.set_defaults(func=cmd_extract)

    v = sub.add_parser("eval", help="similarity between a formula and a data column")
    v.add_argument("--formula", required=True)
    v.add_argument("--data", required=True)
    v.add_argument("--output")
    v.add_argument("--similarity", choices=SIMILARITY_MODES, default="exp")
    v.add_argument("--threshold", type=float, default=0.0, help="exit 1 below this λ")
    logic(v)
    v.set_defaults(func=cmd_eval)

    r = sub.add_parser("run-automaton", help="print the state trace of a word")
    r.add_argument("--automaton", required=True)
    r.add_argument("--word", required=True)
    r.add_argument("--out")
    logic(r)
    r.set_defaults(func=cmd_run_automaton)

    a = sub.add_parser("approx", help="best representable formulas for a neuron")
    a.add_argument("--weights", required=True, help="comma separated integers")
    a.add_argument("--bias", type=int, required=True)
    a.add_argument("--names", help="comma separated input names")
    a.add_argument("--top", type=int, default=5)
    logic(a, 5)
    a.set_defaults(func=cmd_approx)

    c = sub.add_parser("check-spec", help="evaluate the marks of a specification on a model")
    c.add_argument("--spec", help="specification file (default: bundled automata spec)")
    c.add_argument("--model", help="model manifest (default: generated from --automata)")
    c.add_argument("--automata", default="acyclic,cyclic")
    c.add_argument("--length", type=int, default=6)
    c.add_argument("--similarity", choices=SIMILARITY_MODES, default="inf")
    c.add_argument("--partial", action="store_true", help="skip marks on unbound signs")
    c.add_argument("--json", help="also write the report as JSON")
    logic(c, 5)
    c.set_defaults(func=cmd_check_spec)

    f = sub.add_parser("compile-formula", help="formula to automaton or network file")
    f.add_argument("--formula", required=True)
    f.add_argument("--target", choices=("automaton", "network"), default="automaton")
    f.add_argument("--out")
    f.set_defaults(func=cmd_compile_formula)

    rp = sub.add_parser("repro-paper", help="run the reference-value regression suite")
    rp.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    rp.set_defaults(func=cmd_repro_paper)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return IO_ERROR
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
