import math
from fractions import Fraction

import numpy as np
import pytest

from hardymult.martingale import DyadicFunction
from hardymult.poly import AnalyticPoly, StepFunction, sample
from hardymult.symbols import lacunary_check
from hardymult.verify import CHECKS, ESTIMATES, ConfigError, make_config, run_check
from hardymult.verify.empirical import (
    DerivativeRatio,
    DyadicRatio,
    DyadicSetup,
    IdemRatio,
    OldrevRatio,
    SymbolRatio,
    atom_chain,
    reduction_chain,
    stein_symbol,
    two_d_exact_cases,
    two_d_set,
)
from hardymult.verify.generators import pack
from hardymult.verify.strict import (
    discretization_M,
    discretization_sides,
    enl2_exact,
    fejer_identity_sides,
    khintchine_quantities,
    schodkapr_sides,
)

SMALL = {
    "multiplier": {"instances": 16, "n_max": 64},
    "enl2": {"instances": 300},
    "schodkapr": {"instances": 20, "grid": 4096},
    "fejer-identity": {"instances": 50},
    "stein": {"instances": 10, "exact_instances": 20, "search_starts": 2, "search_iters": 10},
    "khintchine": {"instances": 50},
    "discretization": {"instances": 30},
    "dyadicrbdd": {"instances": 20, "search_starts": 2, "search_iters": 5, "atoms": 20},
    "oldrev": {"instances": 20, "search_starts": 2, "search_iters": 5},
    "2d": {"instances": 20, "search_starts": 2, "search_iters": 3},
    "atdec": {"instances": 100, "depth_max": 8, "stability": 0.5},
    "transfer": {"instances": 100},
}


@pytest.mark.parametrize("lemma", sorted(CHECKS))
def test_small_runs_pass(lemma):
    rep = run_check(make_config(lemma, 3, SMALL[lemma]))
    assert rep.passed, rep.failures
    assert rep.violations == 0
    assert rep.config_echo["seed"] == 3


def test_c_alpha_estimate_small():
    rep = run_check(make_config("c-alpha", 3, {"instances": 10, "search_starts": 2,
                                               "search_iters": 10}), estimate=True)
    assert rep.passed and math.isfinite(rep.estimated_constant)
    assert rep.estimated_constant >= 2 * math.pi - 1e-9


# -- worked examples -------------------------------------------------------------

def _enl2_norms(values, n, a, b):
    # ||E*_N f||^2 and (|I| + 2/N) ||f||^2 as fractions
    lhs, rhs = enl2_exact(values, n, a, b)
    p = len(values)
    return Fraction(lhs, n * p * p), Fraction(rhs, n * p * p)


def test_enl2_examples():
    f = [1] + [0] * 7
    lhs, _ = _enl2_norms(f, 8, 0, 1)
    assert lhs == Fraction(1, 8) * Fraction(1, 8)
    lhs, rhs = _enl2_norms([1, 1] + [0] * 6, 8, 0, 2)
    assert rhs == (Fraction(1, 4) + Fraction(1, 4)) * Fraction(2, 8) and lhs <= rhs
    for n in (1, 2, 4, 8):
        lhs, rhs = _enl2_norms([3] * 8, n, 0, 8)
        assert lhs == 9 and rhs == (1 + Fraction(2, n)) * 9


def test_schodkapr_examples():
    lhs, rhs, slack, _ = schodkapr_sides(AnalyticPoly([2.0]), 8, 256, 16)
    assert np.all(lhs == 0) and np.all(rhs == 0)
    lhs, rhs, slack, _ = schodkapr_sides(AnalyticPoly.monomial(1), 16, 1 << 12, 64)
    np.testing.assert_allclose(rhs, math.pi / 8, atol=slack + 1e-12)
    assert np.all(lhs <= math.pi / 8 + 1e-12)


def test_fejer_examples():
    _, conv = fejer_identity_sides(AnalyticPoly(np.ones(5)), 4)
    np.testing.assert_allclose(conv.coeffs[:5], [0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)
    der, conv = fejer_identity_sides(AnalyticPoly([3.0]), 4)
    assert not np.any(der.coeffs) and np.allclose(conv.coeffs, 0)
    _, conv = fejer_identity_sides(AnalyticPoly.monomial(6), 6)
    assert conv.coeff(6) == pytest.approx(1.0)


def test_c_alpha_single_character():
    # |f'/d| = 2 pi |f| for the top character
    obj = DerivativeRatio((8,), 64)
    c = np.zeros(9, dtype=complex)
    c[8] = 1
    assert obj(pack([c])) == pytest.approx(2 * math.pi, rel=1e-12)
    assert obj(pack([np.zeros(9, dtype=complex)])) is None


def test_stein_symbol_examples():
    one = SymbolRatio(stein_symbol("one", [2, 4, 8], None), 256)
    mean = SymbolRatio(stein_symbol("mean", [2, 4, 8], None), 256)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(2 * (one.symbol.horizon + 1))
    assert one(x) == pytest.approx(1.0, rel=1e-12)
    assert mean(x[: 2 * (mean.symbol.horizon + 1)]) <= 1 + 1e-12
    with pytest.raises(ConfigError):
        stein_symbol("mu-eps", [2, 4, 8], [1, 1])


def test_khintchine_single_member():
    g = StepFunction([1.0, -2.0, 0.5, 3.0])
    rad, sq, total = khintchine_quantities([g])
    assert rad == pytest.approx(sq) and sq == pytest.approx(total)


def test_discretization_constants_collapse():
    fam = [AnalyticPoly([2.0]), AnalyticPoly([-1.0 + 1j])]
    M = discretization_M([2, 4], 5.0, 0.25)
    s = discretization_sides(fam, M, 0.25, 256)
    assert s["A"] == pytest.approx(s["B"]) and s["B"] == pytest.approx(s["C"])
    assert s["lower"] <= s["B"] <= s["upper"]


def test_discretization_M_rule():
    assert discretization_M([2, 4], 3.0, 0.25) == [32, 64]
    assert discretization_M([1], 1.0, 0.5) == [2]


def test_dyadic_single_constant_member():
    setup = DyadicSetup((2,), (1,), 0)
    obj = DyadicRatio(setup, (0,), (4,), 1 << 16, 0)
    x = pack([np.full(4, 2.0 + 0j)])
    assert obj(x) == pytest.approx(1 / setup.constant, rel=1e-12)


def test_dyadic_atom_chain_on_haar():
    setup = DyadicSetup((1, 3, 5), (2, 4, 8), 1)
    haar = DyadicFunction([1.0] * 32 + [-1.0] * 32)
    assert atom_chain(haar, 0, setup)["failures"] == []
    # a Haar atom on [1/4, 1/2)
    local = np.zeros(64)
    local[16:24], local[24:32] = 2.0, -2.0
    out = atom_chain(DyadicFunction(local), 2, setup)
    assert out["failures"] == [] and out["j"] == 1


def test_oldrev_characters_ratio_one():
    d, N = (4, 16, 64), (2, 8, 32)
    obj = OldrevRatio(d, N, 256, 1 << 20, 1 << 12, 0)
    arrays = []
    for dk in d:
        c = np.zeros(dk + 1, dtype=complex)
        c[dk] = 1
        arrays.append(c)
    assert obj(pack(arrays)) == pytest.approx(1.0, rel=1e-12)
    const = OldrevRatio((4,), (1,), 64, 1 << 20, 1 << 12, 0)
    c = np.zeros(5, dtype=complex)
    c[0] = 3
    assert const(pack([c])) == pytest.approx(1.0, rel=1e-12)


def test_oldrev_reduction_chain_small_alpha():
    d = (4, 6, 9, 14, 21)
    obj = OldrevRatio(d, (1, 2, 2, 2, 4), 256, 1 << 20, 1 << 12, 0)
    rng = np.random.default_rng(1)
    x = pack([rng.standard_normal(dk + 1) + 1j * rng.standard_normal(dk + 1) for dk in d])
    out = reduction_chain(obj, x)
    assert out["q"] == math.ceil(1 / lacunary_check(d).alpha) + 1
    assert out["failures"] == []


def test_2d_exact_cases():
    A = two_d_set(3)
    assert A.d == (2, 32, 1536) and A.N == (2, 16, 512)
    assert two_d_exact_cases(A, 4) == []


@pytest.mark.parametrize("scale", [1e-3, 3.7, 1e4])
def test_ratio_homogeneity(scale):
    rng = np.random.default_rng(2)
    A = two_d_set(2)
    objs = [
        DerivativeRatio((2, 4, 8), 64),
        SymbolRatio(stein_symbol("mu-eps", [2, 4, 8], [1, -1, 1]), 256),
        OldrevRatio((4, 16), (2, 8), 128, 1 << 20, 1 << 12, 5),
        DyadicRatio(DyadicSetup((1, 3), (2, 4), 1), (0, 2), (2, 4), 1 << 16, 5),
        IdemRatio(A, (0, 1, 2, 16), (2, 1, 0, 16), 4),
    ]
    sizes = [2 * (3 + 5 + 9), None, 2 * (5 + 17), 2 * 6, 2 * 4]
    sizes[1] = 2 * (objs[1].symbol.horizon + 1)
    for obj, n in zip(objs, sizes):
        x = rng.standard_normal(n)
        assert obj(scale * x) == pytest.approx(obj(x), rel=1e-10)


def test_config_errors():
    with pytest.raises(ConfigError):
        make_config("bogus", 1)
    with pytest.raises(ConfigError):
        make_config("enl2", None)
    with pytest.raises(ConfigError):
        make_config("enl2", 1, {"nope": 1})
    with pytest.raises(ConfigError):
        make_config("enl2", -1)
    with pytest.raises(ConfigError):
        make_config("enl2", 1, jobs=0)
    with pytest.raises(ConfigError):
        run_check(make_config("discretization", 1, {"eps": [0.6]}))
    with pytest.raises(ConfigError):
        run_check(make_config("c-alpha", 1, {"d": [2, 2]}), estimate=True)
    with pytest.raises(ConfigError):
        run_check(make_config("stein", 1, {"signs": [1, 1]}))
    with pytest.raises(ConfigError):
        run_check(make_config("c-alpha", 1))


def test_estimate_table():
    assert set(ESTIMATES) == {"c-alpha", "stein", "oldrev", "2d"}


def test_violation_is_reported_with_witness():
    rep = run_check(make_config("enl2", 1, {"instances": 5, "tol": 1e-12}))
    assert rep.passed
    rep.fail("synthetic")
    assert not rep.passed and rep.to_json()["failures"] == ["synthetic"]
