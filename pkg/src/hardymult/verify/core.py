"""Configuration, reports, the instance runner and the norm-ratio search."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit code 2."""


# -- configuration -----------------------------------------------------------

DEFAULTS: dict[str, dict[str, Any]] = {
    "multiplier": {"instances": 64, "n_max": 256, "tol": 1e-12},
    "enl2": {"instances": 10_000, "n_max": 256, "l_max": 8, "value_max": 50, "tol": 1e-12},
    "schodkapr": {"instances": 1000, "degree_max": 32, "n_min": 4, "n_max": 256,
                  "grid": 1 << 14, "cell_nodes": 64, "tol": 1e-12},
    "fejer-identity": {"instances": 1000, "degree_max": 128, "family_max": 4, "tol": 1e-12},
    "c-alpha": {"instances": 200, "d": [2, 4, 8, 16], "search_starts": 6,
                "search_iters": 60, "ceiling_factor": 50.0},
    "stein": {"instances": 200, "d": [2, 4, 8], "signs": [1, -1, 1],
              "search_starts": 4, "search_iters": 40, "ceiling": 10.0,
              "alphas": ["1/2", "1", "2", "4"], "length_max": 12, "exact_instances": 200,
              "identity_tol": 1e-10, "symbol": "mu-eps"},
    "khintchine": {"instances": 1000, "n_max": 10, "alphas": ["1/2", "1"], "tol": 1e-9},
    "discretization": {"instances": 1000, "eps": [0.1, 0.25, 0.4], "d": [2, 4, 8, 16],
                       "c_alpha_est": None, "c_alpha_safety": 2.0, "tol": 1e-12},
    "dyadicrbdd": {"instances": 1000, "search_starts": 50, "search_iters": 20,
                   "sizes_small": [2, 4], "sizes_large": [4, 8], "s": 1,
                   "level_base": 1, "level_step": 2, "atoms": 300,
                   "stability_factor": 2.0, "budget": 1 << 22},
    "oldrev": {"instances": 1000, "search_starts": 50, "search_iters": 20,
               "sizes_small": [2, 4], "sizes_large": [4, 8], "d": None, "N": None,
               "d1": 4, "growth": 2, "beta": 2, "s": 0, "mc_samples": 1 << 14,
               "budget": 1 << 20, "stability_factor": 2.0},
    "2d": {"instances": 1000, "search_starts": 50, "search_iters": 10, "K": 3,
           "oversample": 4, "max_width": 12, "stability_factor": 2.0},
    "atdec": {"instances": 1000, "depth_max": 10, "stability": 0.10},
    "transfer": {"instances": 1000, "members_max": 6, "level_max": 8, "tol": 1e-12},
}

ESTIMATE_TARGETS = {"c-alpha": "c-alpha", "stein": "stein", "oldrev": "oldrev", "2d": "2d"}


@dataclass
class CheckConfig:
    lemma: str
    seed: int
    jobs: int = 1
    params: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def echo(self) -> dict:
        return {"lemma": self.lemma, "seed": self.seed, **self.params}


def make_config(lemma: str, seed: int | None, overrides: dict | None = None,
                jobs: int = 1) -> CheckConfig:
    if lemma not in DEFAULTS:
        raise ConfigError(f"unknown lemma id {lemma!r}; choose from {sorted(DEFAULTS)}")
    if seed is None:
        raise ConfigError("a --seed is required")
    if int(seed) < 0:
        raise ConfigError("seed must be nonnegative")
    params = dict(DEFAULTS[lemma])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigError(f"unknown key {key!r} for {lemma}")
        params[key] = value
    if int(params["instances"]) < 0:
        raise ConfigError("instances must be nonnegative")
    if jobs < 1:
        raise ConfigError("jobs must be positive")
    return CheckConfig(lemma, int(seed), int(jobs), params)


# -- reports ------------------------------------------------------------------

@dataclass
class CheckReport:
    lemma: str
    instances: int = 0
    skipped: int = 0
    violations: int = 0
    worst_ratio: float | None = None
    estimated_constant: float | None = None
    witness: Any = None
    runtime_ms: float | None = None
    config_echo: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and not self.failures

    def fail(self, message: str) -> None:
        self.failures.append(message)

    def to_json(self, timing: bool = False) -> dict:
        return {
            "lemma": self.lemma,
            "passed": self.passed,
            "instances": self.instances,
            "skipped": self.skipped,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
            "estimated_constant": self.estimated_constant,
            "failures": list(self.failures),
            "details": self.details,
            "witness": self.witness,
            "runtime_ms": self.runtime_ms if timing else None,
            "config_echo": self.config_echo,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["instance", "lhs", "rhs", "ratio", "skipped"])
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".17g")
    return x


@dataclass
class Outcome:
    """Result of one randomized instance."""

    lhs: float = 0.0
    rhs: float = 0.0
    ratio: float | None = None
    skipped: bool = False
    violation: bool = False
    witness: Any = None
    extra: dict = field(default_factory=dict)


def absorb(report: CheckReport, outcomes: Sequence[Outcome], start: int = 0) -> None:
    """Fold instance outcomes into a report (order-insensitive aggregates)."""
    for i, o in enumerate(outcomes, start=start):
        report.instances += 1
        report.rows.append((i, float(o.lhs), float(o.rhs),
                            float("nan") if o.ratio is None else float(o.ratio), int(o.skipped)))
        if o.skipped:
            report.skipped += 1
            continue
        if o.violation:
            report.violations += 1
            if report.details.get("first_violation") is None:
                report.details["first_violation"] = {"instance": i, "witness": o.witness}
        if o.ratio is not None and (report.worst_ratio is None or o.ratio > report.worst_ratio):
            report.worst_ratio = float(o.ratio)
            report.witness = {"instance": i, "data": o.witness}


def new_report(cfg: CheckConfig, lemma: str | None = None) -> CheckReport:
    return CheckReport(lemma or cfg.lemma, config_echo=cfg.echo())


def instance_rng(seed: int, stream: int, i: int) -> np.random.Generator:
    """Stream for instance ``i``; depends only on ``(seed, stream, i)``."""
    return np.random.default_rng([int(seed), int(stream), int(i)])


def complex_list(z) -> list:
    return [[float(c.real), float(c.imag)] for c in np.asarray(z, dtype=complex).ravel()]


def run_instances(fn: Callable, args: Sequence, jobs: int = 1) -> list:
    """``[fn(*a) for a in args]``, optionally across processes, order preserved."""
    if jobs <= 1 or len(args) < 2:
        return [fn(*a) for a in args]
    chunk = max(1, len(args) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*args), chunksize=chunk))


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = 1000.0 * (time.perf_counter() - self.t0)


# -- norm-ratio search -------------------------------------------------------------

@dataclass
class RatioSearchState:
    """Best witness found by multi-start coordinate ascent.

    ``history[s, t]`` is the best ratio of start ``s`` after ``t`` iterations
    (column 0 is the initial point); rows are nondecreasing.
    """

    x: np.ndarray | None
    ratio: float
    step: float
    history: np.ndarray
    evaluations: int = 0
    degenerate_starts: int = 0

    def best_at(self, iters: int) -> float:
        if self.history.size == 0:
            return float("nan")
        col = min(iters, self.history.shape[1] - 1)
        return float(np.nanmax(self.history[:, col]))


class DegenerateSearch(RuntimeError):
    """Every start had a zero denominator."""


def search_start(ratio: Callable[[np.ndarray], float | None],
                 generator: Callable[[np.random.Generator], np.ndarray],
                 seed: int, start: int, iters: int, step: float = 0.5,
                 shrink: float = 0.6, patience: int | None = None):
    """One start of the ascent. Returns ``(x, ratio, step, trace, evaluations)``.

    Each iteration perturbs one random coordinate by ``+-step`` times the RMS
    size of the current point and keeps the move only if the ratio grows.
    After ``patience`` consecutive failures the step shrinks.
    """
    rng = np.random.default_rng([int(seed), int(start)])
    x = np.asarray(generator(rng), dtype=float)
    r = ratio(x)
    evals = 1
    trace = np.full(iters + 1, np.nan)
    if r is None:
        return None, None, step, trace, evals
    trace[0] = r
    patience = patience or max(4, min(x.size, 32))
    fails = 0
    for t in range(1, iters + 1):
        i = int(rng.integers(x.size))
        scale = float(np.sqrt(np.mean(x ** 2))) or 1.0
        delta = step * scale * (0.5 + rng.random())
        moved = False
        for sign in (1.0, -1.0):
            y = x.copy()
            y[i] += sign * delta
            ry = ratio(y)
            evals += 1
            if ry is not None and ry > r:
                x, r, moved = y, ry, True
                break
        if moved:
            fails = 0
        else:
            fails += 1
            if fails >= patience:
                step *= shrink
                fails = 0
        trace[t] = r
    return x, r, step, trace, evals


def ratio_search(ratio: Callable[[np.ndarray], float | None],
                 generator: Callable[[np.random.Generator], np.ndarray],
                 starts: int, iters: int, seed: int, step: float = 0.5,
                 jobs: int = 1) -> RatioSearchState:
    """Multi-start coordinatewise perturbation ascent on ``ratio``; deterministic per seed.

    ``ratio`` returns ``None`` for degenerate points (zero denominator).
    """
    results = run_instances(search_start,
                            [(ratio, generator, seed, s, iters, step) for s in range(starts)],
                            jobs)
    history = np.full((starts, iters + 1), np.nan)
    best_x, best_r, best_step = None, -math.inf, step
    evals = degenerate = 0
    for s, (x, r, st, trace, ev) in enumerate(results):
        evals += ev
        if r is None:
            degenerate += 1
            continue
        history[s] = trace
        if r > best_r:
            best_x, best_r, best_step = x, r, st
    if best_x is None:
        raise DegenerateSearch("all starts were degenerate")
    history = history[~np.isnan(history[:, 0])]
    return RatioSearchState(best_x, float(best_r), best_step, history, evals, degenerate)
