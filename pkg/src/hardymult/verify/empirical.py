"""Empirical constants: random families plus norm-ratio search, with stability checks.

Each objective is a small picklable callable mapping a real parameter vector
to a norm ratio (``None`` when the denominator vanishes), so searches and
instances can run in worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..indnorm import BudgetExceeded, ind_norm_cells, ind_norm_exact, ind_norm_mc
from ..martingale import (
    DyadicFunction,
    differences,
    h1_delta_norm,
    rademacher,
)
from ..operators import abs_pointwise, apply_symbol, apply_symbol_2d, shift_average
from ..poly import (
    AnalyticPoly,
    BivariatePoly,
    QuadratureGrid,
    StepFunction,
    derivative,
    is_power_of_two,
    l1_norm,
    l1_norm_2d,
    mixed_l1l2_norm,
    next_power_of_two,
)
from ..symbols import (
    IdemSet2D,
    Symbol,
    SymbolError,
    build_K_hat,
    build_mu_eps,
    lacunary_check,
    split_subsequences,
    stein_constant,
)
from .core import (
    CheckConfig,
    CheckReport,
    ConfigError,
    Outcome,
    absorb,
    instance_rng,
    new_report,
    run_instances,
    search_start,
)
from .generators import pack, random_coeffs, random_dyadic_values, unpack

# stream tags keep random instances, searches and atoms on disjoint seeds
RANDOM, SEARCH, ATOMS = 0, 1, 2


def _system(d):
    try:
        return lacunary_check([int(x) for x in d])
    except (SymbolError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid sequence d: {exc}") from exc


def _run_searches(fn, params, seed, count, iters, jobs, tag=SEARCH, offset=0):
    args = [(params, seed, tag, offset + s, iters) for s in range(count)]
    return run_instances(fn, args, jobs)


def _fold_search(report: CheckReport, results, start: int) -> None:
    """Searched families enter the report like instances (witness = best point)."""
    outs = []
    for r in results:
        if r["ratio"] is None:
            outs.append(Outcome(skipped=True))
        else:
            outs.append(Outcome(r["lhs"], r["rhs"], r["ratio"], witness=r["witness"]))
    absorb(report, outs, start=start)


def _search_result(obj, x, ratio, trace, extra=None) -> dict:
    out = {"ratio": ratio, "trace": trace, "lhs": 0.0, "rhs": 0.0, "witness": None}
    if ratio is not None:
        lhs, rhs = obj.sides(x)
        out.update(lhs=lhs, rhs=rhs, witness={"x": [float(v) for v in x], **(extra or {})})
    return out


def _sup(values) -> float:
    vals = [v for v in values if v is not None and not math.isnan(v)]
    return max(vals) if vals else 0.0


# -- Fejer-derivative constant ---------------------------------------------------

@dataclass
class DerivativeRatio:
    """``||(f_k'/d_k)|| / ||(f_k)||`` for ``f_k`` in ``H1_{d_k}``."""

    d: tuple[int, ...]
    grid: int

    @property
    def sizes(self):
        return [dk + 1 for dk in self.d]

    def family(self, x):
        return [AnalyticPoly(c) for c in unpack(x, self.sizes)]

    def sides(self, x):
        fam = self.family(x)
        den = mixed_l1l2_norm(fam, self.grid)
        num = mixed_l1l2_norm([derivative(f) / dk for f, dk in zip(fam, self.d)], self.grid)
        return num, den

    def __call__(self, x):
        num, den = self.sides(x)
        return None if den == 0.0 else num / den


def _c_alpha_objective(d) -> DerivativeRatio:
    return DerivativeRatio(tuple(d), QuadratureGrid.for_degree(max(d)).size)


def _c_alpha_instance(p, seed, stream, i) -> Outcome:
    rng = instance_rng(seed, stream, i)
    obj = _c_alpha_objective(p["d"])
    x = pack([random_coeffs(rng, s) for s in obj.sizes])
    r = obj(x)
    if r is None:
        return Outcome(skipped=True)
    num, den = obj.sides(x)
    return Outcome(num, den, r, witness={"x": [float(v) for v in x]})


def _c_alpha_search(p, seed, stream, s, iters) -> dict:
    obj = _c_alpha_objective(p["d"])

    def gen(rng):
        return pack([random_coeffs(rng, k) for k in obj.sizes])

    x, r, _, trace, _ = search_start(obj, gen, seed * 1000 + stream, s, iters)
    return _search_result(obj, x, r, trace)


def estimate_c_alpha(cfg: CheckConfig) -> CheckReport:
    sys = _system(cfg["d"])
    rep = new_report(cfg)
    params = dict(cfg.params, d=list(sys.d))
    n = int(cfg["instances"])
    args = [(params, cfg.seed, RANDOM, i) for i in range(n)]
    absorb(rep, run_instances(_c_alpha_instance, args, cfg.jobs))
    res = _run_searches(_c_alpha_search, params, cfg.seed, int(cfg["search_starts"]),
                        int(cfg["search_iters"]), cfg.jobs)
    _fold_search(rep, res, n)
    # top characters give |f_k'/d_k| = 2 pi |f_k| pointwise
    obj = _c_alpha_objective(sys.d)
    top = pack([np.eye(k, dtype=complex)[-1] for k in obj.sizes])
    num, den = obj.sides(top)
    absorb(rep, [Outcome(num, den, num / den, witness={"x": [float(v) for v in top]})],
           start=rep.instances)
    rep.details["top_character_ratio"] = num / den
    rep.estimated_constant = rep.worst_ratio
    alpha = sys.alpha_float()
    ceiling = float(cfg["ceiling_factor"]) * (1 + alpha ** -3)
    rep.details.update({"alpha": None if sys.alpha is None else str(sys.alpha),
                        "ceiling": ceiling})
    if rep.estimated_constant is None or not math.isfinite(rep.estimated_constant):
        rep.fail("no finite estimate")
    elif rep.estimated_constant > ceiling:
        rep.fail(f"estimate {rep.estimated_constant} above the ceiling {ceiling}")
    return rep


def estimate_c_alpha_value(d, seed: int, instances: int = 40, starts: int = 2,
                           iters: int = 20) -> float:
    """Small fixed-budget estimate, used when a check needs ``C_alpha_est``."""
    from .core import make_config
    cfg = make_config("c-alpha", seed, {"d": list(d), "instances": instances,
                                        "search_starts": starts, "search_iters": iters})
    return float(estimate_c_alpha(cfg).estimated_constant)


# -- Stein multiplier probe -------------------------------------------------------------

def stein_symbol(kind: str, d, signs) -> Symbol:
    sys = _system(d)
    horizon = 3 * sys.D[-1]
    if kind == "mu-eps":
        if len(signs) != len(sys.d):
            raise ConfigError("one sign per term of d is required")
        try:
            return build_mu_eps(sys, signs)
        except SymbolError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "k-hat":
        return build_K_hat(sys)
    if kind == "one":
        return Symbol((0, horizon), (1, 1))
    if kind == "mean":
        return Symbol((0, 1, horizon), (1, 0, 0))
    raise ConfigError(f"unknown symbol kind {kind!r}")


@dataclass
class SymbolRatio:
    """``||T_mu f||_1 / ||f||_1`` for analytic ``f`` up to the symbol horizon."""

    symbol: Symbol
    grid: int

    def poly(self, x):
        return AnalyticPoly(unpack(x, [self.symbol.horizon + 1])[0])

    def sides(self, x):
        f = self.poly(x)
        return l1_norm(apply_symbol(f, self.symbol), self.grid), l1_norm(f, self.grid)

    def __call__(self, x):
        num, den = self.sides(x)
        return None if den == 0.0 else num / den


def _stein_objective(p) -> SymbolRatio:
    mu = stein_symbol(p["symbol"], p["d"], p["signs"])
    return SymbolRatio(mu, QuadratureGrid.for_degree(mu.horizon).size)


def _stein_coeffs(rng, obj: SymbolRatio, d) -> np.ndarray:
    """Random coefficients; a third are supported on the symbol's blocks only."""
    h = obj.symbol.horizon
    c = random_coeffs(rng, h + 1)
    if rng.random() < 1 / 3:
        sys = lacunary_check(d)
        mask = np.zeros(h + 1, dtype=bool)
        for k in range(1, len(d) + 1):
            lo = sys.block_start(k) + d[k - 1]
            mask[lo:lo + d[k - 1] + 1] = True
        c = np.where(mask, c, 0.0)
    return c


def _stein_instance(p, seed, stream, i) -> Outcome:
    rng = instance_rng(seed, stream, i)
    obj = _stein_objective(p)
    x = pack([_stein_coeffs(rng, obj, p["d"])])
    r = obj(x)
    if r is None:
        return Outcome(skipped=True)
    num, den = obj.sides(x)
    bad = False
    if p["symbol"] == "mu-eps":
        # applying the sign symbol twice is the identity on block-supported inputs
        sys = lacunary_check(p["d"])
        k = int(rng.integers(1, len(p["d"]) + 1))
        lo = sys.block_start(k) + p["d"][k - 1]
        g = AnalyticPoly(random_coeffs(rng, p["d"][k - 1] + 1), lo)
        twice = apply_symbol(apply_symbol(g, obj.symbol), obj.symbol)
        bad = float(np.max(np.abs(twice.coeffs - g.coeffs))) > float(p["identity_tol"]) * max(
            1.0, float(np.max(np.abs(g.coeffs))))
    return Outcome(num, den, r, violation=bad, witness={"x": [float(v) for v in x]})


def _stein_search(p, seed, stream, s, iters) -> dict:
    obj = _stein_objective(p)
    x, r, _, trace, _ = search_start(
        obj, lambda rng: pack([_stein_coeffs(rng, obj, p["d"])]), seed * 1000 + stream, s, iters)
    return _search_result(obj, x, r, trace)


def check_stein_probe(cfg: CheckConfig) -> CheckReport:
    params = dict(cfg.params, d=[int(x) for x in cfg["d"]],
                  signs=[_sign(s) for s in cfg["signs"]])
    obj = _stein_objective(params)
    C = stein_constant(obj.symbol)
    rep = new_report(cfg)
    n = int(cfg["instances"])
    absorb(rep, run_instances(_stein_instance, [(params, cfg.seed, RANDOM, i) for i in range(n)],
                              cfg.jobs))
    res = _run_searches(_stein_search, params, cfg.seed, int(cfg["search_starts"]),
                        int(cfg["search_iters"]), cfg.jobs)
    _fold_search(rep, res, n)
    rep.estimated_constant = rep.worst_ratio
    ceiling = float(cfg["ceiling"]) * float(C)
    rep.details.update({"stein_constant": str(C), "ceiling": ceiling,
                        "horizon": obj.symbol.horizon})
    if rep.estimated_constant is not None and rep.estimated_constant > ceiling:
        rep.fail(f"ratio {rep.estimated_constant} exceeds the ceiling {ceiling}")
    return rep


def _sign(s) -> int:
    if s in (1, "+", "+1", "1"):
        return 1
    if s in (-1, "-", "-1"):
        return -1
    raise ConfigError(f"invalid sign {s!r}")


# -- T_k = E*_{N_k} |.| on F_{m_k}-measurable families ------------------------------------

@dataclass
class DyadicSetup:
    m: tuple[int, ...]
    N: tuple[int, ...]
    s: int

    @property
    def c2(self) -> float:
        """Shift-average L2 bound at the worst admissible (interval, N_k) pair."""
        vals = [math.sqrt(1 + 2 * 2 ** self.m[k - self.s] / self.N[k])
                for k in range(self.s, len(self.m))]
        return max(vals, default=1.0)

    @property
    def constant(self) -> float:
        return math.sqrt(self.s) + self.c2


def dyadic_setup(rng, n: int, p) -> DyadicSetup:
    base, step, s = int(p["level_base"]), int(p["level_step"]), int(p["s"])
    m = tuple(base + step * k for k in range(n))
    N = []
    for k in range(n):
        lo = m[k - s] if k >= s else 0
        N.append(1 << int(rng.integers(lo, m[k] + 1)))
    return DyadicSetup(m, tuple(N), s)


def dyadic_T(values, N: int) -> StepFunction:
    return shift_average(abs_pointwise(StepFunction(values)), N)


def _ind(family, budget, seed, ids=None):
    try:
        return ind_norm_exact(family, budget)
    except BudgetExceeded:
        return ind_norm_mc(family, 1 << 14, seed, ids)[0]


@dataclass
class DyadicRatio:
    """``||(T_k f_k)||_ind / ((s^{1/2} + C_2) ||(f_k)||)`` with windowed members.

    Member ``k`` lives on the ``F_{m_k}`` cells ``starts[k] .. starts[k]+widths[k]``.
    """

    setup: DyadicSetup
    starts: tuple[int, ...]
    widths: tuple[int, ...]
    budget: int
    seed: int

    def family(self, x):
        out = []
        for mk, st, w, z in zip(self.setup.m, self.starts, self.widths, unpack(x, self.widths)):
            v = np.zeros(1 << mk, dtype=complex)
            v[st:st + w] = z
            out.append(v)
        return out

    def sides(self, x):
        fam = self.family(x)
        num = _ind([dyadic_T(v, N) for v, N in zip(fam, self.setup.N)], self.budget, self.seed)
        den = self.setup.constant * mixed_l1l2_norm([StepFunction(v) for v in fam])
        return num, den

    def __call__(self, x):
        num, den = self.sides(x)
        return None if den == 0.0 else num / den


def _dyadic_problem(rng, n, p, seed):
    setup = dyadic_setup(rng, n, p)
    starts, widths = [], []
    for mk in setup.m:
        cells = 1 << mk
        if rng.random() < 0.3:
            w = cells if cells <= 16 else int(rng.integers(1, 17))
        else:
            w = min(cells, 1 << int(rng.integers(0, 4)))
        starts.append(int(rng.integers(0, cells - w + 1)))
        widths.append(w)
    return DyadicRatio(setup, tuple(starts), tuple(widths), int(p["budget"]), seed)


def _dyadic_sizes(p, group):
    return [int(x) for x in p["sizes_small" if group == 0 else "sizes_large"]]


def _dyadic_instance(p, seed, stream, i) -> Outcome:
    group, idx = divmod(i, int(p["instances"]))
    rng = instance_rng(seed, stream, i)
    sizes = _dyadic_sizes(p, group)
    n = sizes[idx % len(sizes)]
    setup = dyadic_setup(rng, n, p)
    fam = [random_dyadic_values(rng, mk) for mk in setup.m]
    num = _ind([dyadic_T(v, N) for v, N in zip(fam, setup.N)], int(p["budget"]), seed)
    den = setup.constant * mixed_l1l2_norm([StepFunction(v) for v in fam])
    if den == 0.0:
        return Outcome(skipped=True)
    # members reach 2**15 values, so the witness is the generator key instead
    return Outcome(num, den, num / den,
                   witness={"m": list(setup.m), "N": list(setup.N), "rng": [seed, stream, i]},
                   extra={"group": group})


def _dyadic_search(p, seed, stream, s, iters) -> dict:
    group, idx = divmod(s, int(p["search_starts"]))
    rng = instance_rng(seed, stream, s)
    sizes = _dyadic_sizes(p, group)
    obj = _dyadic_problem(rng, sizes[idx % len(sizes)], p, seed)

    def gen(r):
        return pack([random_coeffs(r, w, "gauss") for w in obj.widths])

    x, r, _, trace, _ = search_start(obj, gen, seed * 1000 + stream, s, iters)
    res = _search_result(obj, x, r, trace,
                         {"m": list(obj.setup.m), "N": list(obj.setup.N),
                          "starts": list(obj.starts), "widths": list(obj.widths)})
    res["group"] = group
    return res


def atom_chain(a: DyadicFunction, level: int, setup: DyadicSetup, rel: float = 1e-12) -> dict:
    """Evaluate every intermediate bound of the atom argument; returns the failures.

    ``a`` is an atom on a dyadic interval of length ``2**-level`` (depth
    ``> max m``). With ``f_k = r_{m_k+1} Delta_{m_k+1} a`` and ``j`` the first
    index with ``m_j >= level``, the members before ``j`` vanish and the rest
    split into ``j <= k < j+s`` (bounded through L1(l1)) and ``k >= j+s``
    (bounded through L2(l2)).
    """
    m, N, s = setup.m, setup.N, setup.s
    n = len(m)
    L = a.depth
    D = differences(a)
    a2 = math.sqrt(float(np.mean(np.abs(a.values) ** 2)))
    fk = []
    for mk in m:
        blocks = (rademacher(mk + 1, L).values * D[mk]).reshape(1 << mk, -1)
        if np.max(np.abs(blocks - blocks[:, :1]), initial=0.0) > 1e-12 * max(1.0, a2):
            raise AssertionError(f"r Delta a is not F_{mk}-measurable")
        fk.append(blocks.mean(axis=1))
    T = [dyadic_T(v, Nk) for v, Nk in zip(fk, N)]
    l1 = [float(np.mean(np.abs(v))) for v in fk]
    l2 = [math.sqrt(float(np.mean(np.abs(v) ** 2))) for v in fk]
    Tl1 = [float(np.mean(np.abs(t.values))) for t in T]
    Tl2 = [math.sqrt(float(np.mean(np.abs(t.values) ** 2))) for t in T]
    I = 2.0 ** -level
    j = next((k for k in range(n) if m[k] >= level), n)
    fails = []

    def le(x, y, name):
        if x > y * (1 + rel) + rel * max(1.0, a2):
            fails.append(f"{name}: {x!r} > {y!r}")

    for k in range(j):
        if np.any(np.abs(fk[k]) > 1e-12 * max(1.0, a2)):
            fails.append(f"localization: member {k + 1} before the interval level is nonzero")
    first, second = range(j, min(j + s, n)), range(j + s, n)
    b1 = ind_norm_exact([T[k] for k in first])
    b2 = ind_norm_exact([T[k] for k in second])
    total = ind_norm_exact(T)
    C1, C2 = 1.0, setup.c2
    sum_l2sq = sum(l2[k] ** 2 for k in range(j, n))
    le(b1, sum(Tl1[k] for k in first), "first block through L1(l1)")
    le(sum(Tl1[k] for k in first), C1 * sum(l1[k] for k in first), "L1 contraction")
    le(sum(l1[k] for k in first), math.sqrt(I) * sum(l2[k] for k in first), "support in I")
    le(sum(l2[k] for k in first), math.sqrt(len(first)) * math.sqrt(sum(l2[k] ** 2 for k in first)),
       "Cauchy-Schwarz over s terms")
    le(b2, math.sqrt(sum(Tl2[k] ** 2 for k in second)), "second block through L2(l2)")
    for k in second:
        le(Tl2[k], math.sqrt(1 + 2 / (N[k] * I)) * l2[k], f"shift-average L2 bound, member {k + 1}")
        le(math.sqrt(1 + 2 / (N[k] * I)), C2, f"C2 covers member {k + 1}")
    le(total, b1 + b2, "split of the ind norm")
    le(b1 + b2, (C1 * math.sqrt(s) + C2) * math.sqrt(I) * math.sqrt(sum_l2sq), "combined")
    le(math.sqrt(sum_l2sq), a2, "orthogonality of differences")
    le(a2, I ** -0.5, "atom normalization")
    h1 = h1_delta_norm(a)
    for K in range(1, n + 1):
        le(ind_norm_exact(T[:K]), C1 * math.sqrt(K) * h1, f"a-priori bound K={K}")
    return {"failures": fails, "ratio": total / (C1 * math.sqrt(s) + C2), "j": j}


def _atom_instance(p, seed, stream, i) -> Outcome:
    rng = instance_rng(seed, stream, i)
    sizes = _dyadic_sizes(p, 0) + _dyadic_sizes(p, 1)
    n = sizes[i % len(sizes)]
    setup = dyadic_setup(rng, n, p)
    depth = setup.m[-1] + 1
    level = int(rng.integers(0, depth))
    index = int(rng.integers(0, 1 << level))
    width = 1 << (depth - level)
    if rng.random() < 0.25:
        vals = np.where(np.arange(width) < width // 2, 1.0, -1.0).astype(complex)
    else:
        vals = random_dyadic_values(rng, depth - level)
    vals = vals - vals.mean()
    if not np.any(np.abs(vals) > 1e-12):
        return Outcome(skipped=True)
    a = np.zeros(1 << depth, dtype=complex)
    a[index * width:(index + 1) * width] = vals
    scale = float(rng.uniform(0.2, 1.0)) * 2.0 ** (level / 2) / math.sqrt(float(np.mean(np.abs(a) ** 2)))
    atom = DyadicFunction(a * scale)
    res = atom_chain(atom, level, setup)
    return Outcome(res["ratio"], 1.0, res["ratio"], violation=bool(res["failures"]),
                   witness={"m": list(setup.m), "N": list(setup.N), "level": level,
                            "index": index, "failures": res["failures"]})


def _stability(rep: CheckReport, small: float, large: float, factor: float, label: str):
    growth = large / small if small > 0 else math.inf
    rep.details[f"{label}_sup_small"] = small
    rep.details[f"{label}_sup_large"] = large
    rep.details[f"{label}_growth"] = growth
    if not (math.isfinite(small) and math.isfinite(large)):
        rep.fail(f"{label}: empirical sup is not finite")
    elif not growth < factor:
        rep.fail(f"{label}: sup grew by {growth:.3f}, not below {factor}")


def check_dyadicrbdd(cfg: CheckConfig) -> CheckReport:
    if int(cfg["s"]) < 0 or int(cfg["level_step"]) < 1 or int(cfg["level_base"]) < 0:
        raise ConfigError("need s >= 0, level_step >= 1 and level_base >= 0")
    rep = new_report(cfg)
    p = dict(cfg.params)
    n = int(cfg["instances"])
    outs = run_instances(_dyadic_instance, [(p, cfg.seed, RANDOM, i) for i in range(2 * n)],
                         cfg.jobs)
    absorb(rep, outs)
    res = _run_searches(_dyadic_search, p, cfg.seed, 2 * int(cfg["search_starts"]),
                        int(cfg["search_iters"]), cfg.jobs)
    _fold_search(rep, res, 2 * n)
    sups = [_sup([o.ratio for o in outs if not o.skipped and o.extra["group"] == g]
                 + [r["ratio"] for r in res if r["group"] == g]) for g in (0, 1)]
    rep.estimated_constant = max(sups)
    _stability(rep, sups[0], sups[1], float(cfg["stability_factor"]), "size")
    atoms = run_instances(_atom_instance,
                          [(p, cfg.seed, ATOMS, i) for i in range(int(cfg["atoms"]))], cfg.jobs)
    bad = [o for o in atoms if o.violation]
    rep.details["atoms"] = len(atoms)
    rep.details["atom_chain_failures"] = len(bad)
    if bad:
        rep.violations += len(bad)
        rep.details.setdefault("first_violation", {"atom": bad[0].witness})
    return rep


# -- shift-average of |f| on lacunary H1 families ------------------------------------

def oldrev_system(p, n: int):
    """``(d, N)`` either from the config or generated with ratio ``growth``."""
    s, beta = int(p["s"]), Fraction(str(p["beta"]))
    if p.get("d") is not None:
        d = [int(x) for x in p["d"]]
        if p.get("N") is None:
            raise ConfigError("N must be given together with d")
        N = [int(x) for x in p["N"]]
    else:
        d = [int(p["d1"]) * int(p["growth"]) ** k for k in range(n)]
        N = []
        for k in range(n):
            ref = d[k - s] if k >= s else d[0]
            N.append(next_power_of_two(math.ceil(Fraction(ref) / beta)))
    sys = _system(d)
    if len(N) != len(d):
        raise ConfigError("d and N must have the same length")
    if any(not is_power_of_two(x) for x in N):
        raise ConfigError("N_k must be powers of two")
    for k in range(len(d) - s):
        if d[k] > beta * N[k + s]:
            raise ConfigError(f"d_{k + 1} = {d[k]} exceeds beta * N_{k + 1 + s}")
    return sys, N


@dataclass
class OldrevRatio:
    """``||(E*_{N_k}|f_k|)||_ind / ||(f_k)||`` for ``f_k`` in ``H1_{d_k}``."""

    d: tuple[int, ...]
    N: tuple[int, ...]
    grid: int
    budget: int
    samples: int
    mc_seed: int

    def family(self, x):
        return [AnalyticPoly(c) for c in unpack(x, [dk + 1 for dk in self.d])]

    def pieces(self, fam):
        return [shift_average(abs_pointwise(f, self.grid), Nk) for f, Nk in zip(fam, self.N)]

    def ind(self, T, ids, exact: bool):
        if exact:
            return ind_norm_exact(T, self.budget)
        return ind_norm_mc(T, self.samples, self.mc_seed, ids)[0]

    def sides(self, x):
        fam = self.family(x)
        T = self.pieces(fam)
        exact = ind_norm_cells(T) <= self.budget
        return self.ind(T, range(len(T)), exact), mixed_l1l2_norm(fam, self.grid)

    def __call__(self, x):
        num, den = self.sides(x)
        return None if den == 0.0 else num / den


def oldrev_objective(p, n, mc_seed) -> OldrevRatio:
    sys, N = oldrev_system(p, n)
    grid = QuadratureGrid.for_degree(max(sys.d), divisible_by=N).size
    return OldrevRatio(sys.d, tuple(N), grid, int(p["budget"]), int(p["mc_samples"]), mc_seed)


def reduction_chain(obj: OldrevRatio, x, rel: float = 1e-12) -> dict:
    """Split into ``q`` stride-``q`` subsequences and test both reduction inequalities."""
    sys = lacunary_check(obj.d)
    out = {"q": None, "failures": []}
    if sys.alpha is None or sys.alpha > 1:
        return out
    q = math.ceil(1 / sys.alpha) + 1
    out["q"] = q
    subs = split_subsequences(sys, q)
    target = (1 + sys.alpha) ** q - 1
    for r, sub in enumerate(subs):
        if len(sub.d) >= 2 and not (sub.alpha >= target and sub.alpha > 1):
            out["failures"].append(f"subsequence {r} has ratio bound {sub.alpha} < {target}")
    fam = obj.family(x)
    T = obj.pieces(fam)
    exact = ind_norm_cells(T) <= obj.budget
    whole_num = obj.ind(T, range(len(T)), exact)
    whole_den = mixed_l1l2_norm(fam, obj.grid)
    nums, dens = [], []
    for r in range(q):
        idx = list(range(r, len(fam), q))
        if not idx:
            continue
        nums.append(obj.ind([T[k] for k in idx], idx, exact))
        dens.append(mixed_l1l2_norm([fam[k] for k in idx], obj.grid))
    if whole_den < sum(dens) / math.sqrt(q) * (1 - rel):
        out["failures"].append("mixed norm below q^{-1/2} times the subsequence sum")
    if whole_num > sum(nums) * (1 + rel) + 1e-300:
        out["failures"].append("ind norm above the subsequence sum")
    out.update(whole=[whole_num, whole_den], parts=[nums, dens])
    return out


def _oldrev_instance(p, seed, stream, i) -> Outcome:
    group, idx = divmod(i, int(p["instances"]))
    rng = instance_rng(seed, stream, i)
    sizes = _dyadic_sizes(p, group)
    mc_seed = int(rng.integers(1 << 62))
    obj = oldrev_objective(p, sizes[idx % len(sizes)], mc_seed)
    x = pack([random_coeffs(rng, dk + 1) for dk in obj.d])
    r = obj(x)
    if r is None:
        return Outcome(skipped=True)
    num, den = obj.sides(x)
    chain = reduction_chain(obj, x)
    return Outcome(num, den, r, violation=bool(chain["failures"]),
                   witness={"d": list(obj.d), "N": list(obj.N), "mc_seed": mc_seed,
                            "x": [float(v) for v in x], "chain": chain["failures"]},
                   extra={"group": group})


def _oldrev_search(p, seed, stream, s, iters) -> dict:
    group, idx = divmod(s, int(p["search_starts"]))
    rng = instance_rng(seed, stream, s)
    sizes = _dyadic_sizes(p, group)
    mc_seed = int(rng.integers(1 << 62))
    obj = oldrev_objective(p, sizes[idx % len(sizes)], mc_seed)

    def gen(r):
        return pack([random_coeffs(r, dk + 1) for dk in obj.d])

    x, r, _, trace, _ = search_start(obj, gen, seed * 1000 + stream, s, iters)
    res = _search_result(obj, x, r, trace, {"d": list(obj.d), "N": list(obj.N),
                                            "mc_seed": mc_seed})
    res["group"] = group
    res["chain"] = reduction_chain(obj, x)["failures"] if x is not None else []
    return res


def check_oldrev(cfg: CheckConfig) -> CheckReport:
    p = dict(cfg.params)
    if int(p["s"]) < 0 or not Fraction(str(p["beta"])) > 0:
        raise ConfigError("need s >= 0 and beta > 0")
    if int(p["mc_samples"]) < 2:
        raise ConfigError("mc_samples must be at least 2")
    explicit = p.get("d") is not None
    if explicit:
        count = len(p["d"])
        p["sizes_small"] = p["sizes_large"] = [count]
    oldrev_system(p, max(_dyadic_sizes(p, 1)))  # validate before running
    rep = new_report(cfg)
    n = int(p["instances"])
    groups = 1 if explicit else 2
    outs = run_instances(_oldrev_instance, [(p, cfg.seed, RANDOM, i) for i in range(groups * n)],
                         cfg.jobs)
    absorb(rep, outs)
    res = _run_searches(_oldrev_search, p, cfg.seed, groups * int(p["search_starts"]),
                        int(p["search_iters"]), cfg.jobs)
    _fold_search(rep, res, groups * n)
    chain_bad = sum(1 for r in res if r["chain"])
    rep.violations += chain_bad
    sups = [_sup([o.ratio for o in outs if not o.skipped and o.extra["group"] == g]
                 + [r["ratio"] for r in res if r["group"] == g]) for g in range(groups)]
    rep.estimated_constant = max(sups)
    if explicit:
        if not math.isfinite(sups[0]):
            rep.fail("empirical sup is not finite")
    else:
        _stability(rep, sups[0], sups[1], float(cfg["stability_factor"]), "size")
    return rep


# -- idempotent multiplier on the bidisc ----------------------------------------------

def two_d_set(K: int) -> IdemSet2D:
    """``N_k = 2^{k^2}``, ``d_k = k 2^{k^2}`` for ``k = 1..K``."""
    return IdemSet2D(tuple(k * 2 ** (k * k) for k in range(1, K + 1)),
                     tuple(2 ** (k * k) for k in range(1, K + 1)))


LAMBDAS = (Fraction(0), Fraction(1, 3), Fraction(2, 3), Fraction(1))


@dataclass
class IdemRatio:
    """``||1_A F||_1 / ||F||_1`` on a fixed support (windows on chosen layers)."""

    A: IdemSet2D
    n1: tuple[int, ...]
    n2: tuple[int, ...]
    oversample: int

    def poly(self, x):
        return BivariatePoly(np.array(self.n1), np.array(self.n2), unpack(x, [len(self.n1)])[0])

    def sides(self, x):
        F = self.poly(x)
        return (l1_norm_2d(apply_symbol_2d(F, self.A), self.oversample),
                l1_norm_2d(F, self.oversample))

    def __call__(self, x):
        num, den = self.sides(x)
        return None if den == 0.0 else num / den


def two_d_support(rng, A: IdemSet2D, max_width: int):
    """Frequencies in windows around points of ``A`` on a random set of layers.

    All windows share one direction ``n1 ~ lambda * layer`` so that a sheared
    grid stays small; off-layer rows (sum ``d_k +- 1..3``) are mixed in.
    """
    lam = LAMBDAS[int(rng.integers(len(LAMBDAS)))]
    layers = [d for d in A.d if rng.random() < 0.6] or [A.d[int(rng.integers(len(A.d)))]]
    n1, n2 = [], []
    for dk in layers:
        Nk = A.N[A.d.index(dk)]
        rows = [dk] + [dk + int(x) for x in rng.integers(-3, 4, size=int(rng.integers(0, 3)))]
        centre = Nk * round(lam * dk / Nk)
        w = int(rng.integers(0, max_width + 1))
        for total in sorted(set(rows)):
            for a in range(max(0, centre - w), min(total, centre + w) + 1):
                n1.append(a)
                n2.append(total - a)
    pts = sorted(set(zip(n1, n2)))
    return tuple(p[0] for p in pts), tuple(p[1] for p in pts)


def _two_d_problem(rng, p) -> IdemRatio:
    A = two_d_set(int(p["K"]))
    n1, n2 = two_d_support(rng, A, int(p["max_width"]))
    return IdemRatio(A, n1, n2, int(p["oversample"]))


def _two_d_instance(p, seed, stream, i) -> Outcome:
    rng = instance_rng(seed, stream, i)
    obj = _two_d_problem(rng, p)
    x = pack([random_coeffs(rng, len(obj.n1))])
    r = obj(x)
    if r is None:
        return Outcome(skipped=True)
    num, den = obj.sides(x)
    return Outcome(num, den, r, witness={"n1": list(obj.n1), "n2": list(obj.n2),
                                         "x": [float(v) for v in x]})


def _two_d_search(p, seed, stream, s, iters) -> dict:
    rng = instance_rng(seed, stream, s)
    obj = _two_d_problem(rng, p)
    x, r, _, trace, _ = search_start(obj, lambda g: pack([random_coeffs(g, len(obj.n1))]),
                                     seed * 1000 + stream, s, iters)
    return _search_result(obj, x, r, trace, {"n1": list(obj.n1), "n2": list(obj.n2)})


def two_d_exact_cases(A: IdemSet2D, oversample: int) -> list[str]:
    """A monomial in ``A`` is kept with ratio 1; data off ``A`` is annihilated."""
    fails = []
    for dk, Nk in zip(A.d, A.N):
        for a in range(0, dk + 1, Nk):
            F = BivariatePoly(np.array([a]), np.array([dk - a]), np.array([1.0 + 0.5j]))
            r = l1_norm_2d(apply_symbol_2d(F, A), oversample) / l1_norm_2d(F, oversample)
            if r != 1.0:
                fails.append(f"monomial ({a}, {dk - a}) ratio {r}")
        off = BivariatePoly(np.array([1, 0, dk]), np.array([dk, dk + 1, 1]), np.array([1.0, 2.0, 3.0]))
        if apply_symbol_2d(off, A).coeffs.size or l1_norm_2d(apply_symbol_2d(off, A)) != 0.0:
            fails.append(f"off-set data on layer {dk} not annihilated")
    return fails


def check_2d_multiplier(cfg: CheckConfig) -> CheckReport:
    if int(cfg["K"]) < 1 or int(cfg["oversample"]) < 1:
        raise ConfigError("need K >= 1 and oversample >= 1")
    p = dict(cfg.params)
    rep = new_report(cfg)
    A = two_d_set(int(p["K"]))
    n = int(p["instances"])
    outs = run_instances(_two_d_instance, [(p, cfg.seed, RANDOM, i) for i in range(n)], cfg.jobs)
    absorb(rep, outs)
    budget = int(p["search_iters"])
    res = _run_searches(_two_d_search, p, cfg.seed, int(p["search_starts"]), 2 * budget, cfg.jobs)
    _fold_search(rep, res, n)
    base = _sup([o.ratio for o in outs if not o.skipped])
    at = lambda t: max(base, _sup([float(r["trace"][t]) for r in res if r["ratio"] is not None]))
    rep.estimated_constant = at(2 * budget)
    _stability(rep, at(budget), at(2 * budget), float(cfg["stability_factor"]), "budget")
    rep.details.update({"d": list(A.d), "N": list(A.N)})
    for msg in two_d_exact_cases(A, int(p["oversample"])):
        rep.fail(msg)
    return rep
