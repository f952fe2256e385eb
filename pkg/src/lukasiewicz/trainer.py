"""Levenberg–Marquardt training under smooth crystallization, and formula extraction.

The pipeline trains a network on a single-output view, rounds it to a crisp
network, prunes redundant links with Optimal Brain Surgeon, approximates
unrepresentable neurons and reads the result back as a formula.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .logic import Formula, eval_numerators, exp_similarity, to_text
from .network import CastroNetwork, Layer, translate_network

log = logging.getLogger(__name__)

EPS = 1e-8


@dataclass
class TrainConfig:
    n: int = 4
    seed: int = 0
    tau: float = 0.95
    restarts: int | None = None  # None means 5 + 2 * inputs
    schedule: list[list[int]] = field(default_factory=lambda: [[2], [4], [4, 2], [6, 3]])
    mu_init: float = 0.01
    mu_factor: float = 10.0
    mu_max: float = 1e10
    max_epochs: int = 500
    exponent: int = 2
    target: float = 1.0
    prune_tolerance: float = 1e-9
    sse_tolerance: float = 1e-12
    jobs: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.mu_factor <= 1:
            raise ValueError("mu_factor must exceed 1")

    def restarts_for(self, inputs: int) -> int:
        return self.restarts if self.restarts is not None else 5 + 2 * inputs

    @classmethod
    def from_text(cls, text: str, **overrides) -> "TrainConfig":
        values = {}
        kinds = {f.name: f for f in dataclasses.fields(cls)}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "TrainConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), **overrides)


def parse_schedule(text: str) -> list[list[int]]:
    """``"2;4;4,2"`` → [[2], [4], [4, 2]]; an empty level means no hidden layer."""
    return [[int(w) for w in level.split(",") if w.strip()] for level in text.split(";")]


def _coerce(key: str, raw: str):
    if key == "schedule":
        return parse_schedule(raw)
    if key in ("n", "seed", "max_epochs", "exponent", "jobs"):
        return int(raw)
    if key == "restarts":
        return None if raw.lower() in ("", "auto", "none") else int(raw)
    return float(raw)


# ---------------------------------------------------------------------------
# crystallization


def soft_crystallize(w, exponent: int = 2):
    """Υ_n(w) = sign(w)·(cos((1 − frac|w|)·π/2)^n + ⌊|w|⌋); integers are fixed points."""
    w = np.asarray(w, dtype=float)
    a = np.abs(w)
    whole = np.floor(a)
    frac = a - whole
    pull = np.where(frac == 0, 0.0, np.cos((1.0 - frac) * np.pi / 2) ** exponent)
    out = np.sign(w) * (pull + whole)
    return out if out.ndim else float(out)


def representation_error(net: CastroNetwork, literal: bool = False) -> float:
    """Σ distance of weights and biases to the nearest integer (``literal``: w − ⌊w⌋)."""
    p = get_params(net)
    if literal:
        return float(np.sum(p - np.floor(p)))
    return float(np.sum(np.abs(p - np.round(p))))


def crisp_crystallize(net: CastroNetwork) -> CastroNetwork:
    layers = [Layer(np.clip(np.round(l.weights), -1, 1) + 0.0, np.round(l.biases) + 0.0)
              for l in net.layers]
    return CastroNetwork(list(net.inputs), layers, crisp=True)


# ---------------------------------------------------------------------------
# parameters and Jacobian


def get_params(net: CastroNetwork) -> np.ndarray:
    return np.concatenate([np.concatenate([l.weights.ravel(), l.biases]) for l in net.layers])


def set_params(net: CastroNetwork, p: np.ndarray, crisp: bool = False) -> CastroNetwork:
    layers, i = [], 0
    for l in net.layers:
        nw = l.weights.size
        w = p[i:i + nw].reshape(l.weights.shape)
        i += nw
        b = p[i:i + l.width]
        i += l.width
        layers.append(Layer(w.copy(), b.copy()))
    return CastroNetwork(list(net.inputs), layers, crisp=crisp)


def weight_mask(net: CastroNetwork) -> np.ndarray:
    """True for weight coordinates, False for biases."""
    return np.concatenate([np.concatenate([np.ones(l.weights.size, bool), np.zeros(l.width, bool)])
                           for l in net.layers])


def residuals_and_jacobian(net: CastroNetwork, x: np.ndarray, y: np.ndarray,
                           sw: np.ndarray | None = None, jacobian: bool = True):
    """Residuals (pred − target) stacked output-major, and their Jacobian.

    ψ' is taken as 1 on the closed interval [0, 1] and 0 outside.  ``sw`` holds
    square-root row weights.
    """
    acts = [x]
    pre = []
    for l in net.layers:
        z = acts[-1] @ l.weights.T + l.biases
        pre.append(z)
        acts.append(np.clip(z, 0.0, 1.0))
    pred = acts[-1]
    scale = sw[:, None] if sw is not None else 1.0
    e = ((pred - y) * scale).T.reshape(-1)
    if not jacobian:
        return e, None
    slopes = [((z >= 0) & (z <= 1)).astype(float) for z in pre]
    rows, outs = x.shape[0], pred.shape[1]
    blocks = []
    for o in range(outs):
        delta = np.zeros_like(pred)
        delta[:, o] = slopes[-1][:, o]
        grads = []
        for li in range(len(net.layers) - 1, -1, -1):
            gw = delta[:, :, None] * acts[li][:, None, :]
            grads.append(np.concatenate([gw.reshape(rows, -1), delta], axis=1))
            if li:
                delta = (delta @ net.layers[li].weights) * slopes[li - 1]
        j = np.concatenate(grads[::-1], axis=1)
        if sw is not None:
            j = j * sw[:, None]
        blocks.append(j)
    return e, np.concatenate(blocks, axis=0)


def sse(net, x, y, sw=None) -> float:
    e, _ = residuals_and_jacobian(net, x, y, sw, jacobian=False)
    return float(e @ e)


def _solve(a: np.ndarray, g: np.ndarray) -> np.ndarray:
    try:
        step = np.linalg.solve(a, g)
        if np.all(np.isfinite(step)):
            return step
    except np.linalg.LinAlgError:
        pass
    return np.linalg.solve(a + EPS * np.eye(len(a)), g)


def lm_step(net: CastroNetwork, x, y, mu: float, sw=None, exponent: int = 2,
            crystallize: bool = True) -> tuple[CastroNetwork, float, bool]:
    """One damped Gauss–Newton step followed by Υ; accepted only if SSE drops."""
    e, j = residuals_and_jacobian(net, x, y, sw)
    old = float(e @ e)
    jtj = j.T @ j
    a = jtj + mu * np.diag(np.diag(jtj))
    step = _solve(a, j.T @ e)
    p = get_params(net) - step
    if crystallize:
        p = soft_crystallize(p, exponent)
    cand = set_params(net, p)
    new = sse(cand, x, y, sw)
    if new < old:
        return cand, new, True
    return net, old, False


# ---------------------------------------------------------------------------
# training


def random_network(inputs: Sequence[str], hidden: Sequence[int], outputs: int,
                   rng: np.random.Generator) -> CastroNetwork:
    widths = [len(inputs)] + list(hidden) + [outputs]
    layers = [Layer(rng.uniform(-1, 1, (widths[i + 1], widths[i])),
                    rng.uniform(-1, 1, widths[i + 1])) for i in range(len(widths) - 1)]
    return CastroNetwork(list(inputs), layers)


@dataclass
class FitResult:
    net: CastroNetwork
    sse: float
    epochs: int


def fit(net: CastroNetwork, x, y, cfg: TrainConfig, sw=None) -> FitResult:
    mu = cfg.mu_init
    err = sse(net, x, y, sw)
    epochs = 0
    while epochs < cfg.max_epochs and mu <= cfg.mu_max and err > cfg.sse_tolerance:
        epochs += 1
        net, err, ok = lm_step(net, x, y, mu, sw, cfg.exponent)
        mu = mu / cfg.mu_factor if ok else mu * cfg.mu_factor
    return FitResult(net, err, epochs)


def _restart_rng(cfg: TrainConfig, level: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, level, restart])


@dataclass
class Problem:
    """Deduplicated training rows for one view."""

    inputs: list[str]
    outputs: list[str]
    n: int
    x_num: np.ndarray
    y_num: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_dataset(cls, data: Dataset, inputs=None, outputs=None) -> "Problem":
        inputs = list(inputs or data.inputs)
        outputs = list(outputs or data.outputs)
        if not outputs:
            raise ValueError("the view needs at least one output attribute")
        rows, counts = data.unique_rows(inputs + outputs)
        k = len(inputs)
        return cls(inputs, outputs, data.n, rows[:, :k], rows[:, k:], counts)

    @property
    def x(self):
        return self.x_num / self.n

    @property
    def y(self):
        return self.y_num / self.n

    @property
    def sw(self):
        return np.sqrt(self.counts.astype(float))

    def similarity(self, pred: np.ndarray, output: int = 0) -> float:
        return exp_similarity(pred, self.y[:, output], weights=self.counts)

    def net_similarity(self, net: CastroNetwork, output: int = 0) -> float:
        return self.similarity(net.forward(self.x)[:, output], output)

    def formula_similarity(self, f: Formula, output: int = 0) -> float:
        env = {name: self.x_num[:, i] for i, name in enumerate(self.inputs)}
        got = np.broadcast_to(eval_numerators(f, env, self.n), (len(self.x_num),))
        return self.similarity(got / self.n, output)


def train(hidden: Sequence[int], problem: Problem, cfg: TrainConfig,
          level: int = 0) -> tuple[CastroNetwork, dict]:
    """Best network over the restarts for one topology (by λ, then restart index)."""
    runs = _run_restarts(hidden, problem, cfg, level)
    best = max(runs, key=lambda r: (r["lambda"], -r["restart"]))
    return best["net"], {"topology": list(hidden), "runs": len(runs),
                         "lambda": best["lambda"], "epochs": best["epochs"],
                         "restart": best["restart"]}


def _one_restart(args):
    hidden, problem, cfg, level, restart = args
    rng = _restart_rng(cfg, level, restart)
    net = random_network(problem.inputs, hidden, len(problem.outputs), rng)
    res = fit(net, problem.x, problem.y, cfg, problem.sw)
    lam = problem.net_similarity(res.net)
    return {"restart": restart, "net": res.net, "lambda": lam, "epochs": res.epochs,
            "sse": res.sse}


def _run_restarts(hidden, problem, cfg, level, restarts=None):
    count = restarts if restarts is not None else cfg.restarts_for(len(problem.inputs))
    tasks = [(list(hidden), problem, cfg, level, r) for r in range(count)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_one_restart, tasks))
    return [_one_restart(t) for t in tasks]


# ---------------------------------------------------------------------------
# pruning


def obs_prune(net: CastroNetwork, problem: Problem, tolerance: float = 1e-9,
              output: int | None = None) -> tuple[CastroNetwork, list[dict]]:
    """Optimal Brain Surgeon on a crisp network.

    Weights are tried in increasing saliency ½·w_q²/[H⁻¹]_qq; the compensated
    step Δw = −(w_q/[H⁻¹]_qq)·H⁻¹e_q is applied, the result re-crystallized,
    and the pruning kept if SSE grows by at most ``tolerance`` over the start.
    """
    x, y, sw = problem.x, problem.y, problem.sw
    if output is not None:
        y = y[:, [output]]
    base = sse(net, x, y, sw)
    mask = weight_mask(net)
    log_ = []
    while True:
        p = get_params(net)
        live = np.flatnonzero(mask & (p != 0))
        if not len(live):
            break
        _, j = residuals_and_jacobian(net, x, y, sw)
        h = j.T @ j + EPS * np.eye(len(p))
        hinv = np.linalg.inv(h)
        sal = 0.5 * p[live] ** 2 / np.diag(hinv)[live]
        accepted = False
        for q, s in sorted(zip(live, sal), key=lambda t: (t[1], t[0])):
            options = []
            for compensate in (True, False):
                cand = p.copy()
                if compensate:
                    cand = cand - (p[q] / hinv[q, q]) * hinv[:, q]
                cand[q] = 0.0
                trial = crisp_crystallize(set_params(net, cand))
                tp = get_params(trial)
                tp[q] = 0.0
                trial = set_params(trial, tp, crisp=True)
                options.append((sse(trial, x, y, sw), trial))
            err, trial = min(options, key=lambda t: t[0])
            if err - base <= tolerance:
                log_.append({"index": int(q), "saliency": float(s), "sse": err})
                net, accepted = trial, True
                break
        if not accepted:
            break
    return net, log_


# ---------------------------------------------------------------------------
# reverse engineering


@dataclass
class TrainReport:
    output: str
    lambda_raw: float = 0.0
    lambda_crisp: float = 0.0
    lambda_pruned: float = 0.0
    lambda_final: float = 0.0
    lambda_translation: float = 0.0
    topology: list[int] = field(default_factory=list)
    epochs: int = 0
    restarts_used: int = 0
    pruned: int = 0
    formula: str = ""
    neurons: list[dict] = field(default_factory=list)
    attempts: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        lines = [
            f"output        {self.output}",
            f"formula       {self.formula}",
            f"lambda        raw {self.lambda_raw:.4f}  crisp {self.lambda_crisp:.4f}  "
            f"pruned {self.lambda_pruned:.4f}  final {self.lambda_final:.4f}",
            f"translation   {self.lambda_translation:.4f} (formula vs crisp network)",
            f"topology      {self.topology}  epochs {self.epochs}  restarts {self.restarts_used}"
            f"  pruned links {self.pruned}",
        ]
        for nr in self.neurons:
            lines.append(f"  {nr['name']:>4} {nr['config']:<28} {nr['kind']:<15} "
                         f"{nr['similarity']:.4f}  {nr['formula']}")
        return "\n".join(lines)


def _candidate(net, problem, cfg, output, attempt):
    crisp = crisp_crystallize(net)
    lam_crisp = problem.net_similarity(crisp, output)
    attempt["lambda_crisp"] = lam_crisp
    if lam_crisp < cfg.tau:
        return None
    pruned, plog = obs_prune(crisp, problem, cfg.prune_tolerance, output)
    lam_pruned = problem.net_similarity(pruned, output)
    tr = translate_network(pruned, cfg.n, output)
    lam_final = problem.formula_similarity(tr.formula, output)
    attempt["lambda_final"] = lam_final
    return {"crisp": lam_crisp, "pruned": lam_pruned, "final": lam_final,
            "translation": tr, "pruned_links": len(plog), "net": pruned}


def reverse_engineer(data: Dataset | Problem, cfg: TrainConfig | None = None,
                     output: str | None = None, inputs: Sequence[str] | None = None
                     ) -> tuple[Formula, float, TrainReport]:
    """Train, crystallize, prune and translate; λ is measured against the data."""
    cfg = cfg or TrainConfig()
    if isinstance(data, Dataset):
        outs = [output] if output else list(data.outputs)[:1]
        problem = Problem.from_dataset(data, inputs, outs)
    else:
        problem = data
    if problem.n != cfg.n:
        cfg = dataclasses.replace(cfg, n=problem.n)
    out = 0
    report = TrainReport(problem.outputs[out])
    best, best_key = None, None
    raw_best, raw_key = None, None
    for level, hidden in enumerate(cfg.schedule):
        runs = _run_restarts(hidden, problem, cfg, level)
        report.restarts_used += len(runs)
        found = False
        for run in runs:
            key = (run["lambda"], -level, -run["restart"])
            if raw_key is None or key > raw_key:
                raw_key, raw_best = key, (run, hidden)
            attempt = {"topology": list(hidden), "restart": run["restart"],
                       "lambda_raw": run["lambda"], "epochs": run["epochs"]}
            report.attempts.append(attempt)
            if run["lambda"] < cfg.tau:
                continue
            cand = _candidate(run["net"], problem, cfg, out, attempt)
            if cand is None:
                continue
            found = True
            key = (cand["final"], -level, -run["restart"])
            if best_key is None or key > best_key:
                best_key, best = key, (run, cand, hidden)
            if cand["final"] >= cfg.target:
                break
        if found:
            break
    if best is None:
        # nothing passed τ: translate the best raw network anyway and say so
        log.warning("no network reached tau=%.3f; reporting the best attempt", cfg.tau)
        run, hidden = raw_best
        crisp = crisp_crystallize(run["net"])
        tr = translate_network(crisp, cfg.n, out)
        cand = {"crisp": problem.net_similarity(crisp, out), "pruned": 0.0,
                "final": problem.formula_similarity(tr.formula, out), "translation": tr,
                "pruned_links": 0, "net": crisp}
        best = (run, cand, hidden)
    run, cand, hidden = best
    tr = cand["translation"]
    report.lambda_raw = run["lambda"]
    report.lambda_crisp = cand["crisp"]
    report.lambda_pruned = cand["pruned"]
    report.lambda_final = cand["final"]
    report.lambda_translation = tr.similarity
    report.topology = list(hidden)
    report.epochs = run["epochs"]
    report.pruned = cand["pruned_links"]
    report.formula = to_text(tr.formula)
    report.neurons = [dataclasses.asdict(nr) for nr in tr.neurons]
    return tr.formula, cand["final"], report


def save_report(report: TrainReport, path: str | Path):
    Path(path).write_text(json.dumps(report.to_json(), indent=1) + "\n", encoding="utf-8")
