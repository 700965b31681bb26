"""Checks with explicit constants and exact identities (zero violations required)."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..indnorm import rademacher_average_exact, square_function_norm
from ..martingale import (
    C_DEC,
    DyadicFunction,
    atomic_decompose,
    differences,
    h1_delta_norm,
    is_atom,
    rademacher,
    rademacher_embed,
)
from ..operators import (
    abs_pointwise,
    apply_symbol,
    grid_expectation,
    shift_average,
    shift_average_by_rotation,
    translate,
)
from ..poly import (
    TWO_PI,
    AnalyticPoly,
    QuadratureGrid,
    StepFunction,
    convolve,
    derivative,
    fejer_kernel,
    l2_norm,
    mixed_l1l2_norm,
    next_power_of_two,
    sample,
)
from ..symbols import (
    SymbolError,
    build_K_hat,
    build_mu_eps,
    lacunary_check,
    modulated_fejer,
    stein_bound,
    stein_constant,
)
from .core import (
    CheckConfig,
    CheckReport,
    ConfigError,
    Outcome,
    absorb,
    complex_list,
    instance_rng,
    new_report,
    run_instances,
)
from .generators import random_analytic, random_block, random_coeffs, random_dyadic_values


def _run(cfg: CheckConfig, fn, count: int, stream: int = 0) -> list[Outcome]:
    args = [(cfg.params, cfg.seed, stream, i) for i in range(count)]
    return run_instances(fn, args, cfg.jobs)


def _tol(p, key="tol", default=1e-12) -> float:
    t = float(p.get(key, default))
    if not t > 0:
        raise ConfigError("tolerances must be positive")
    return t


# -- multiplier form of the shift average ---------------------------------------------

def _multiplier_instance(p, seed, stream, i) -> Outcome:
    """All frequencies ``0..n_max`` at once for ``N = i + 1``, by both routes."""
    tol = _tol(p)
    n = i + 1
    rng = instance_rng(seed, stream, i)
    c = random_coeffs(rng, int(p["n_max"]) + 1, "unimodular")
    f = AnalyticPoly(c)
    keep = (np.arange(c.size) % n == 0).astype(float)
    coef_err = float(np.max(np.abs(shift_average(f, n).coeffs - keep * c)))
    grid = n * next_power_of_two(c.size + 1)
    out = shift_average_by_rotation(sample(f, grid), n).values
    mult = (np.fft.fft(out) / grid)[:c.size] / c
    samp_err = float(np.max(np.abs(mult - keep)))
    err = max(coef_err, samp_err)
    return Outcome(err, tol, None, violation=err > tol,
                   witness={"N": n, "coefficient_error": coef_err, "sample_error": samp_err})


def check_multiplier(cfg: CheckConfig) -> CheckReport:
    """``E*_N e_n = 1_{N | n} e_n`` for ``n <= n_max`` and ``N <= instances``."""
    if int(cfg["n_max"]) < 0:
        raise ConfigError("n_max must be nonnegative")
    rep = new_report(cfg)
    outs = _run(cfg, _multiplier_instance, int(cfg["instances"]))
    absorb(rep, outs)
    rep.details["max_error"] = max((o.lhs for o in outs), default=0.0)
    return rep


# -- shift-average L2 bound ----------------------------------------------------------

def enl2_exact(values, n: int, a: int, b: int) -> tuple[int, int]:
    """Integer form of the bound for integer step data on ``P = len(values)`` cells.

    Returns ``(lhs, rhs)`` with ``lhs <= rhs`` iff
    ``||E*_N f||_2 <= sqrt(|I| + 2/N) ||f||_2`` where ``I = [a/P, b/P)``.
    """
    v = np.asarray(values, dtype=np.int64)
    p = v.size
    s = v.reshape(n, p // n).sum(axis=0)
    sum_s2 = sum(int(x) * int(x) for x in s)
    sum_f2 = sum(int(x) * int(x) for x in v)
    return p * sum_s2, ((b - a) * n + 2 * p) * sum_f2


def _enl2_instance(p, seed, stream, i) -> Outcome:
    tol = _tol(p)
    rng = instance_rng(seed, stream, i)
    n = int(rng.integers(1, p["n_max"] + 1))
    per = int(rng.integers(1, p["l_max"] + 1))
    P = n * per
    vm = int(p["value_max"])
    a = int(rng.integers(0, P))
    b = int(rng.integers(a + 1, P + 1))
    v = np.zeros(P, dtype=np.int64)
    v[a:b] = rng.integers(-vm, vm + 1, size=b - a)
    if not v.any():
        v[a] = 1
    lhs_int, rhs_int = enl2_exact(v, n, a, b)
    f = StepFunction(v.astype(float))
    lhs = l2_norm(shift_average(f, n))
    rhs = math.sqrt((b - a) / P + 2 / n) * l2_norm(f)
    exact_lhs = math.sqrt(lhs_int / (n * P * P))
    mismatch = abs(lhs - exact_lhs) > tol * max(1.0, exact_lhs)
    # equality case: support inside one cell of length 1/N
    c = int(rng.integers(n))
    a2 = c * per + int(rng.integers(per))
    b2 = int(rng.integers(a2 + 1, (c + 1) * per + 1))
    w = np.zeros(P, dtype=np.int64)
    w[a2:b2] = rng.integers(1, vm + 1, size=b2 - a2) * rng.choice([-1, 1], size=b2 - a2)
    s = w.reshape(n, per).sum(axis=0)
    cell_exact = int(s @ s) == int(w @ w)
    g = StepFunction(w.astype(float))
    cell_float = abs(l2_norm(shift_average(g, n)) ** 2 - l2_norm(g) ** 2 / n) <= tol * l2_norm(g) ** 2
    bad = lhs_int > rhs_int or mismatch or not cell_exact or not cell_float
    return Outcome(lhs, rhs, lhs / rhs, violation=bad,
                   witness={"N": n, "P": P, "I": [a, b], "values": v[a:b].tolist()})


def check_enl2(cfg: CheckConfig) -> CheckReport:
    rep = new_report(cfg)
    absorb(rep, _run(cfg, _enl2_instance, int(cfg["instances"])))
    return rep


# -- pointwise grid-expectation bound -----------------------------------------------

def schodkapr_sides(f: AnalyticPoly, n: int, grid: int, cell_nodes: int):
    """Both sides of ``|(id - E_N) f| <= (1/N) E_N |f'|`` at the grid nodes.

    Returns ``(lhs, rhs_nominal, slack, scale)``. The cell means of ``|f'|``
    use a midpoint rule with ``cell_nodes`` nodes per cell; its error is at
    most ``Lip(|f'|) h / 4`` per cell with ``h = 1/(N cell_nodes)`` and the
    coefficient bound ``Lip(|f'|) <= sum (2 pi j)^2 |c_j|``.
    """
    vals = sample(f, grid).values
    cells = (np.arange(grid) * n) // grid
    lhs = np.abs(vals - grid_expectation(f, n).values[cells])
    fp = derivative(f)
    h = 1.0 / (n * cell_nodes)
    mid = np.abs(sample(translate(fp, -h / 2), n * cell_nodes).values)
    means = mid.reshape(n, cell_nodes).mean(axis=1)
    lip = float(np.sum((TWO_PI * f.frequencies) ** 2 * np.abs(f.coeffs)))
    slack = lip * h / 4 / n
    rhs = means[cells] / n
    return lhs, rhs, slack, float(np.max(np.abs(vals))) if vals.size else 0.0


def _schodkapr_instance(p, seed, stream, i) -> Outcome:
    tol = _tol(p)
    rng = instance_rng(seed, stream, i)
    deg = int(rng.integers(0, p["degree_max"] + 1))
    n = int(rng.integers(p["n_min"], p["n_max"] + 1))
    f = random_analytic(rng, deg)
    lhs, rhs, slack, scale = schodkapr_sides(f, n, int(p["grid"]), int(p["cell_nodes"]))
    excess = lhs - (rhs + slack) - tol * (1.0 + scale)
    pos = rhs > 0
    ratio = float(np.max(lhs[pos] / rhs[pos])) if pos.any() else 0.0
    worst = int(np.argmax(lhs - rhs))
    return Outcome(float(lhs[worst]), float(rhs[worst]), ratio, violation=bool(np.any(excess > 0)),
                   witness={"N": n, "coeffs": complex_list(f.coeffs), "slack": slack})


def check_schodkapr(cfg: CheckConfig) -> CheckReport:
    from ..poly import is_power_of_two
    if not is_power_of_two(int(cfg["grid"])):
        raise ConfigError("grid must be a power of two")
    if int(cfg["n_min"]) < 1 or int(cfg["n_max"]) < int(cfg["n_min"]):
        raise ConfigError("need 1 <= n_min <= n_max")
    if int(cfg["n_max"]) * int(cfg["cell_nodes"]) < int(cfg["degree_max"]) + 1:
        raise ConfigError("cell_nodes too small for the degree")
    rep = new_report(cfg)
    absorb(rep, _run(cfg, _schodkapr_instance, int(cfg["instances"])))
    return rep


# -- derivative / Fejer convolution identity ---------------------------------------

def fejer_identity_sides(f: AnalyticPoly, d: int):
    """``(f'/d, f * (K_d e^{2 pi i d t}))``; the first is ``2 pi i`` times the second."""
    return derivative(f) / d, convolve(f, fejer_kernel(d).modulate(d))


def _fejer_instance(p, seed, stream, i) -> Outcome:
    tol = _tol(p)
    rng = instance_rng(seed, stream, i)
    count = int(rng.integers(1, p["family_max"] + 1))
    lhs_fam, conv_fam, bad = [], [], False
    for _ in range(count):
        d = int(rng.integers(1, p["degree_max"] + 1))
        f = random_analytic(rng, d)
        lhs, conv = fejer_identity_sides(f, d)
        j = f.frequencies
        direct = 1j * TWO_PI * (j / d) * f.coeffs
        scale = max(1.0, float(np.max(np.abs(lhs.coeffs))))
        err = max(float(np.max(np.abs(lhs.coeffs - 1j * TWO_PI * conv.coeffs))),
                  float(np.max(np.abs(lhs.coeffs - direct))))
        bad |= err > tol * scale
        lhs_fam.append(lhs)
        conv_fam.append(conv)
    grid = QuadratureGrid.for_degree(max(f.high for f in lhs_fam))
    a = mixed_l1l2_norm(lhs_fam, grid)
    b = TWO_PI * mixed_l1l2_norm(conv_fam, grid)
    bad |= abs(a - b) > tol * max(1.0, a)
    return Outcome(a, b, a / b, violation=bad,
                   witness={"coeffs": [complex_list(f.coeffs) for f in conv_fam]})


def check_fejer_identity(cfg: CheckConfig) -> CheckReport:
    rep = new_report(cfg)
    absorb(rep, _run(cfg, _fejer_instance, int(cfg["instances"])))
    return rep


# -- Stein hypothesis for the block symbols ----------------------------------------

def random_lacunary(rng: np.random.Generator, alpha: Fraction, n: int) -> tuple[int, ...]:
    """Lacunary sequence of length ``n`` whose exact ratio bound is ``>= alpha``.

    Half the draws are exactly geometric (ratio ``1 + alpha`` throughout).
    """
    alpha = Fraction(alpha)
    if rng.random() < 0.5:
        q = alpha.denominator
        d = [q ** (n - 1) * int(rng.integers(1, 4))]
        for _ in range(n - 1):
            d.append(d[-1] * (1 + alpha))
        return tuple(int(x) for x in d)
    d = [int(rng.integers(1, 5))]
    for _ in range(n - 1):
        base = math.ceil((1 + alpha) * d[-1])
        d.append(base + int(rng.integers(0, 1 + d[-1] // 4)))
    return tuple(d)


def _stein_exact_instance(p, seed, stream, i) -> Outcome:
    tol = float(p.get("identity_tol", 1e-10))
    rng = instance_rng(seed, stream, i)
    alphas = [Fraction(str(a)) for a in p["alphas"]]
    alpha = alphas[i % len(alphas)]
    n = int(rng.integers(1, p["length_max"] + 1))
    d = random_lacunary(rng, alpha, n)
    sys = lacunary_check(d)
    target = max(Fraction(1), 3 * (1 + 1 / alpha))
    bound = stein_bound(sys)
    signs = [int(s) for s in rng.choice([-1, 1], size=n)]
    mu = build_mu_eps(sys, signs)
    kh = build_K_hat(sys)
    c_mu, c_k = stein_constant(mu), stein_constant(kh)
    bad = not (c_mu <= bound <= target and c_k <= bound)
    # identities on block-supported inputs
    k = int(rng.integers(1, n + 1))
    start, dk = sys.block_start(k), d[k - 1]
    g = random_block(rng, start + dk, start + 2 * dk, max_width=64)
    sg = apply_symbol(g, mu)
    scale = max(1.0, float(np.max(np.abs(g.coeffs))))
    bad |= float(np.max(np.abs(sg.coeffs - signs[k - 1] * g.coeffs))) > tol * scale
    bad |= float(np.max(np.abs(apply_symbol(sg, mu).coeffs - g.coeffs))) > tol * scale
    h = random_block(rng, start + dk, start + 3 * dk, max_width=64)
    kg = apply_symbol(h, kh)
    ref = convolve(h, modulated_fejer(sys, k, window=(h.low, h.high)))
    bad |= float(np.max(np.abs(kg.coeffs - ref.coeffs))) > tol * max(1.0, float(np.max(np.abs(h.coeffs))))
    ratio = float(max(c_mu, c_k) / target)
    return Outcome(float(max(c_mu, c_k)), float(target), ratio, violation=bad,
                   witness={"d": list(d), "signs": signs, "stein_mu": str(c_mu),
                            "stein_k": str(c_k), "bound": str(bound)})


def check_stein_exact(cfg: CheckConfig) -> CheckReport:
    for a in cfg["alphas"]:
        if not Fraction(str(a)) > 0:
            raise ConfigError("alphas must be positive")
    rep = CheckReport("stein-exact", config_echo=cfg.echo())
    absorb(rep, _run(cfg, _stein_exact_instance, int(cfg["exact_instances"]), stream=1))
    return rep


# -- Khintchine bracketing ------------------------------------------------------------

def khintchine_quantities(family) -> tuple[float, float, float]:
    """``(Rademacher average, square-function norm, ||sum g_k||_1)`` on step data."""
    rad = rademacher_average_exact(family)
    sq = square_function_norm(family)
    total = float(np.mean(np.abs(sum(g.values for g in family))))
    return rad, sq, total


def _khintchine_instance(p, seed, stream, i) -> Outcome:
    tol = _tol(p, default=1e-9)
    rng = instance_rng(seed, stream, i)
    alphas = [Fraction(str(a)) for a in p["alphas"]]
    alpha = alphas[int(rng.integers(len(alphas)))]
    n = int(rng.integers(1, p["n_max"] + 1))
    d = [1]
    for _ in range(n - 1):
        d.append(math.ceil((1 + alpha) * d[-1]))
    sys = lacunary_check(d)
    top = 3 * sys.D[-1]
    m = next_power_of_two(2 * (top + 1))
    polys = [random_block(rng, sys.block_start(k) + d[k - 1], sys.block_start(k) + 2 * d[k - 1])
             for k in range(1, n + 1)]
    family = [sample(g, m) for g in polys]
    rad, sq, total = khintchine_quantities(family)
    if sq == 0.0:
        return Outcome(skipped=True)
    r = rad / sq
    bad = not (1 / math.sqrt(2) - tol <= r <= 1 + tol)
    return Outcome(rad, sq, r, violation=bad,
                   witness={"d": d, "alpha": str(alpha), "offsets": [g.offset for g in polys],
                            "coeffs": [complex_list(g.coeffs) for g in polys]},
                   extra={"sum_ratio": total / sq})


def check_khintchine_equivalence(cfg: CheckConfig) -> CheckReport:
    rep = new_report(cfg)
    outs = _run(cfg, _khintchine_instance, int(cfg["instances"]))
    absorb(rep, outs)
    sums = [o.extra["sum_ratio"] for o in outs if not o.skipped]
    ratios = [o.ratio for o in outs if not o.skipped]
    if ratios:
        rep.details["min_bracket_ratio"] = min(ratios)
        rep.details["max_bracket_ratio"] = max(ratios)
    if sums:
        rep.details["sum_to_square_min"] = min(sums)
        rep.details["sum_to_square_max"] = max(sums)
        rep.estimated_constant = max(max(sums), 1.0 / min(sums))
    # constant pair: the lower bracket is attained
    pair = [StepFunction([1.0]), StepFunction([1.0])]
    rad, sq, _ = khintchine_quantities(pair)
    rep.details["constant_pair_ratio"] = rad / sq
    if abs(rad / sq - 1 / math.sqrt(2)) > 1e-12:
        rep.fail("constant pair does not attain 1/sqrt(2)")
    return rep


# -- discretization --------------------------------------------------------------

def discretization_sides(family, M, eps: float, grid: int) -> dict:
    """All three mixed norms with their rigorous Riemann-sum error bounds.

    ``A = ||(E_{M_k}|f_k|)||``, ``B = ||(f_k)||``, ``C = ||(E_{M_k} f_k)||``.
    ``|f_k|`` and ``sqrt(sum |f_k|^2)`` are Lipschitz with constants
    ``L_k = sum 2 pi j |c_j|`` and ``sqrt(sum L_k^2)``, so left-endpoint sums on
    cells of width ``h`` are off by at most ``L h / 2``.
    """
    h = 1.0 / grid
    lips = [float(np.sum(TWO_PI * np.abs(f.frequencies) * np.abs(f.coeffs))) for f in family]
    lip = math.sqrt(sum(x * x for x in lips))
    A = mixed_l1l2_norm([grid_expectation(abs_pointwise(f, grid), mk) for f, mk in zip(family, M)])
    B = mixed_l1l2_norm(family, grid)
    C = mixed_l1l2_norm([grid_expectation(f, mk) for f, mk in zip(family, M)])
    return {"A": A, "B": B, "C": C, "errA": lip * h / 2, "errB": lip * h / 2,
            "lower": (1 - eps) * A, "upper": (1 - eps) / (1 - 2 * eps) * C}


def discretization_M(d, c_alpha: float, eps: float) -> list[int]:
    """Smallest powers of two with ``d_k <= eps M_k / C``."""
    out = []
    for dk in d:
        need = Fraction(c_alpha) * dk / Fraction(eps)
        out.append(next_power_of_two(math.ceil(need)))
    return out


def _discretization_instance(p, seed, stream, i) -> Outcome:
    tol = _tol(p)
    rng = instance_rng(seed, stream, i)
    eps_list = [float(e) for e in p["eps"]]
    eps = eps_list[i % len(eps_list)]
    d = [int(x) for x in p["d"]]
    M = discretization_M(d, float(p["_c_alpha"]), eps)
    assert all(dk <= eps * mk / float(p["_c_alpha"]) for dk, mk in zip(d, M))
    if rng.random() < 0.1:
        family = [AnalyticPoly.constant(c) for c in random_coeffs(rng, len(d), "gauss")]
    else:
        family = [random_analytic(rng, dk, exact=False) for dk in d]
    grid = max(QuadratureGrid.for_degree(max(d)).size, 4 * max(M))
    s = discretization_sides(family, M, eps, grid)
    slack1 = (1 - eps) * s["errA"] + s["errB"] + tol * max(1.0, s["B"])
    slack2 = s["errB"] + tol * max(1.0, s["B"])
    bad = s["lower"] - s["B"] > slack1 or s["B"] - s["upper"] > slack2
    if s["B"] == 0.0:
        return Outcome(skipped=True, violation=bad)
    ratio = max(s["lower"] / s["B"], s["B"] / s["upper"])
    return Outcome(s["lower"], s["B"], ratio, violation=bad,
                   witness={"eps": eps, "M": M, "coeffs": [complex_list(f.coeffs) for f in family]})


def validate_eps(eps_list) -> list[float]:
    out = []
    for e in eps_list if isinstance(eps_list, (list, tuple)) else [eps_list]:
        e = float(e)
        if not 0 < e < 0.5:
            raise ConfigError(f"eps must lie in (0, 1/2), got {e}")
        out.append(e)
    return out


def check_discretization(cfg: CheckConfig, c_alpha: float | None = None) -> CheckReport:
    eps = validate_eps(cfg["eps"])
    try:
        sys = lacunary_check(cfg["d"])
    except SymbolError as exc:
        raise ConfigError(str(exc)) from exc
    rep = new_report(cfg)
    if c_alpha is None:
        c_alpha = cfg["c_alpha_est"]
    if c_alpha is None:
        from .empirical import estimate_c_alpha_value
        est = estimate_c_alpha_value(list(sys.d), cfg.seed)
        c_alpha = float(cfg["c_alpha_safety"]) * est
        rep.details["c_alpha_estimate"] = est
    c_alpha = float(c_alpha)
    if not c_alpha > 0:
        raise ConfigError("C_alpha estimate must be positive")
    rep.details["c_alpha_used"] = c_alpha
    rep.details["M"] = {str(e): discretization_M(sys.d, c_alpha, e) for e in eps}
    params = dict(cfg.params, eps=eps, _c_alpha=c_alpha)
    args = [(params, cfg.seed, 0, i) for i in range(int(cfg["instances"]))]
    absorb(rep, run_instances(_discretization_instance, args, cfg.jobs))
    return rep


# -- atomic decomposition -----------------------------------------------------------

def _atdec_instance(p, seed, stream, i) -> Outcome:
    rng = instance_rng(seed, stream, i)
    depth = int(rng.integers(1, p["depth_max"] + 1))
    f = DyadicFunction(random_dyadic_values(rng, depth))
    dec = atomic_decompose(f)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    err = float(np.max(np.abs(dec.reconstruct().values - f.values)))
    bad = err > 1e-10 * scale or not all(is_atom(a) for a in dec.atoms)
    norm = h1_delta_norm(f)
    if norm == 0.0:
        bad |= dec.coefficient_sum() != 0.0
        return Outcome(skipped=True, violation=bad)
    ratio = dec.coefficient_sum() / norm
    bad |= ratio > C_DEC * (1 + 1e-12)
    return Outcome(dec.coefficient_sum(), norm, ratio, violation=bad,
                   witness={"depth": depth, "values": complex_list(f.values)},
                   extra={"reconstruction_error": err})


def check_atdec(cfg: CheckConfig) -> CheckReport:
    """Decomposition soundness and a batch-stability check of ``sum|c| / ||f||``."""
    rep = new_report(cfg)
    half = int(cfg["instances"]) // 2
    batches, errs = [], [0.0]
    for stream in (0, 1):
        outs = _run(cfg, _atdec_instance, half, stream=stream)
        absorb(rep, outs, start=stream * half)
        batches.append(max((o.ratio for o in outs if not o.skipped), default=0.0))
        errs += [o.extra["reconstruction_error"] for o in outs if o.extra]
    rep.details["max_reconstruction_error"] = max(errs)
    rep.estimated_constant = max(batches)
    rep.details.update({"C_dec": C_DEC, "batch_sup": batches})
    spread = abs(batches[0] - batches[1]) / max(batches) if max(batches) > 0 else 0.0
    rep.details["batch_spread"] = spread
    if spread > float(cfg["stability"]):
        rep.fail(f"batch sups differ by {spread:.3f} > {cfg['stability']}")
    return rep


# -- norm transfer through the Rademacher embedding ------------------------------------

def _transfer_instance(p, seed, stream, i) -> Outcome:
    tol = _tol(p)
    rng = instance_rng(seed, stream, i)
    count = int(rng.integers(1, p["members_max"] + 1))
    lmax = int(p["level_max"])
    count = min(count, lmax + 1)
    m = sorted(int(x) for x in rng.choice(lmax + 1, size=count, replace=False))
    family = [DyadicFunction(random_dyadic_values(rng, mk)) for mk in m]
    f = rademacher_embed(family, m)
    a = h1_delta_norm(f)
    b = mixed_l1l2_norm([StepFunction(g.values) for g in family])
    bad = abs(a - b) > tol * max(1.0, b)
    D = differences(f)
    levels = {mk + 1: g for mk, g in zip(m, family)}
    for nlev in range(1, f.depth + 1):
        row = D[nlev - 1]
        if nlev in levels:
            ref = rademacher(nlev, f.depth).values * levels[nlev].refine(f.depth).values
            bad |= float(np.max(np.abs(row - ref))) > tol * max(1.0, float(np.max(np.abs(ref))))
        else:
            bad |= float(np.max(np.abs(row))) > tol
    return Outcome(a, b, a / b if b else 1.0, violation=bad, witness={"m": m})


def check_transfer(cfg: CheckConfig) -> CheckReport:
    rep = new_report(cfg)
    absorb(rep, _run(cfg, _transfer_instance, int(cfg["instances"])))
    return rep
