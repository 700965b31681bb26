import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardymult.symbols import (
    IdemSet2D,
    LacunarySystem,
    Symbol,
    SymbolError,
    block_range,
    build_K_hat,
    build_mu_eps,
    idem_contains,
    lacunary_check,
    modulated_fejer,
    split_subsequences,
    stein_bound,
    stein_constant,
    system_from_json,
    system_to_json,
)


def test_stein_constant_basic_symbols():
    assert stein_constant(Symbol.from_values([1] * 10)) == 1
    assert stein_constant(Symbol.from_values([1] + [0] * 9)) == 1
    harmonic = Symbol.from_values([Fraction(1, n + 1) for n in range(50)])
    assert stein_constant(harmonic) == 1


def test_stein_constant_matches_dense_scan():
    mu = build_mu_eps(lacunary_check([1, 2, 4]), [1, -1, 1])
    vals = [mu(n) for n in range(mu.horizon + 1)]
    brute = max(max(abs(v) for v in vals),
                max((n + 1) * abs(vals[n + 1] - vals[n]) for n in range(len(vals) - 1)))
    assert stein_constant(mu) == brute


def test_lacunary_check_examples():
    s = lacunary_check([1, 2, 4, 8])
    assert s.alpha == 1 and s.D == (1, 3, 7, 15)
    s = lacunary_check([1, 2, 3])
    assert s.alpha == Fraction(1, 2) and s.D[-1] == 6
    with pytest.raises(SymbolError):
        lacunary_check([2, 2])
    with pytest.raises(SymbolError):
        lacunary_check([0, 1])
    with pytest.raises(SymbolError):
        lacunary_check([])


def test_m_sequence_invariants():
    s = lacunary_check([2, 5, 13, 40], c_alpha_est=3.7)
    for dk, Mk in zip(s.d, s.M):
        assert 3 * 3.7 * dk <= Mk < 6 * 3.7 * dk
    assert all(b > a for a, b in zip(s.m, s.m[1:]))  # alpha > 1
    with pytest.raises(SymbolError):
        s.with_c_alpha(0)


def test_mu_eps_nodal_values():
    mu = build_mu_eps(lacunary_check([1, 2, 4]), [1, 1, 1])
    assert (mu(0), mu(1), mu(2), mu(3)) == (0, 1, 1, 0)
    assert mu(4) == Fraction(1, 2)
    assert mu.horizon == 21 and mu(21) == 0
    with pytest.raises(SymbolError):
        build_mu_eps(lacunary_check([1, 2]), [1])
    with pytest.raises(SymbolError):
        build_mu_eps(lacunary_check([1, 2]), [1, 0])


def test_k_hat_nodal_values():
    kh = build_K_hat(lacunary_check([1, 2, 4]))
    assert kh(0) == kh(1) == 0 and kh(2) == 1
    kh = build_K_hat(lacunary_check([2, 4, 8]))
    assert kh(3) == Fraction(1, 2) and kh(4) == 1
    assert kh(3 * 2) == 0


def test_modulated_fejer_examples():
    s = lacunary_check([1, 2, 4])
    k = modulated_fejer(s, 2)
    assert k.coeff(7) == 1.0
    lo, hi = block_range(s, 2, 1, 3)
    assert k.coeff(lo) == 0 and k.coeff(hi) == 0
    assert k.low == lo + 1 and k.high == hi - 1
    with pytest.raises(SymbolError):
        modulated_fejer(s, 4)


def test_idem_contains_examples():
    A = IdemSet2D((10, 20), (2, 5))
    assert idem_contains(A, 4, 6)
    assert not idem_contains(A, 3, 7)
    assert not idem_contains(A, 4, 5)
    np.testing.assert_array_equal(A.contains_many([4, 3, 15], [6, 7, 5]), [True, False, True])
    with pytest.raises(SymbolError):
        IdemSet2D((3, 2), (1, 1))


def test_split_subsequences():
    s = lacunary_check([1, 2, 3, 4, 6, 9])
    assert split_subsequences(s, 1)[0].d == s.d
    subs = split_subsequences(s, 2)
    assert [x.d for x in subs] == [(1, 3, 6), (2, 4, 9)]
    target = (1 + s.alpha) ** 2 - 1
    assert all(x.alpha >= target for x in subs)
    many = split_subsequences(lacunary_check([1, 3]), 4)
    assert [len(x) for x in many] == [1, 1, 0, 0]


def test_json_round_trip():
    s = lacunary_check([2, 4, 8], c_alpha_est=2.5)
    mu = build_mu_eps(s, [1, -1, 1])
    doc = json.loads(json.dumps(system_to_json(s, mu)))
    s2, mu2 = system_from_json(doc)
    assert s2 == s and mu2 == mu


lacunary = st.lists(st.integers(1, 6), min_size=1, max_size=8).map(
    lambda steps: [sum(steps[:i + 1]) * 2 ** i for i in range(len(steps))])


@settings(max_examples=60)
@given(lacunary, st.data())
def test_block_symbols_meet_the_stein_bound(d, data):
    s = lacunary_check(d)
    signs = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(d), max_size=len(d)))
    bound = stein_bound(s)
    assert stein_constant(build_mu_eps(s, signs)) <= bound
    assert stein_constant(build_K_hat(s)) <= bound
    if s.alpha is not None:
        assert bound <= max(1, 3 * (1 + 1 / s.alpha))
        assert all(Dk <= (1 + 1 / s.alpha) * dk for Dk, dk in zip(s.D, s.d))


@given(lacunary)
def test_symbol_float_values_agree_with_exact(d):
    mu = build_K_hat(lacunary_check(d))
    n = np.arange(0, mu.horizon + 1, max(1, mu.horizon // 50))
    np.testing.assert_allclose(mu.values_at(n), [float(mu(int(x))) for x in n], atol=1e-15)


def test_empty_system():
    assert len(LacunarySystem.empty()) == 0


def test_modulated_fejer_window_is_a_restriction():
    s = lacunary_check([3, 7, 20])
    full = modulated_fejer(s, 3)
    lo, hi = block_range(s, 3, 1, 3)
    part = modulated_fejer(s, 3, window=(lo + 5, lo + 30))
    assert part.low == lo + 5 and part.high == lo + 30
    np.testing.assert_array_equal(part.coeffs, full.coeff(np.arange(lo + 5, lo + 31)))
    assert not np.any(modulated_fejer(s, 3, window=(0, 10)).coeffs)
