import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardymult.martingale import (
    C_DEC,
    Atom,
    DyadicFunction,
    MeasurabilityError,
    atomic_decompose,
    decomposition_to_json,
    differences,
    dyadic_expectation,
    dyadic_from_json,
    dyadic_to_json,
    h1_delta_norm,
    is_atom,
    martingale_difference,
    rademacher,
    rademacher_embed,
    square_function,
)
from hardymult.poly import AnalyticPoly, StepFunction, mixed_l1l2_norm, sample

HAAR = DyadicFunction([1.0, -1.0])


def test_expectation_examples():
    f = DyadicFunction([1, 3, 5, 7])
    np.testing.assert_allclose(dyadic_expectation(f, 1).values, [2, 2, 6, 6])
    np.testing.assert_allclose(dyadic_expectation(f, 2).values, f.values)
    np.testing.assert_allclose(dyadic_expectation(f, 0).values, [4] * 4)
    with pytest.raises(ValueError):
        dyadic_expectation(f, 3)


def test_differences_examples():
    assert np.all(martingale_difference(DyadicFunction([2.0] * 8), 2).values == 0)
    np.testing.assert_allclose(martingale_difference(HAAR, 1).values, HAAR.values)
    f = DyadicFunction(np.arange(8.0) ** 2)
    np.testing.assert_allclose(differences(f).sum(axis=0) + f.mean(), f.values)


def test_square_function_examples():
    np.testing.assert_allclose(square_function(HAAR).values, [1, 1])
    assert h1_delta_norm(HAAR) == 1.0
    assert np.all(square_function(DyadicFunction([3.0] * 4)).values == 0)
    f = rademacher(1, 2) + rademacher(2, 2)
    np.testing.assert_allclose(square_function(f).values, [math.sqrt(2)] * 4)


def test_rademacher_convention():
    np.testing.assert_array_equal(rademacher(1).values, [1, -1])
    np.testing.assert_array_equal(rademacher(2).values, [1, -1, 1, -1])
    with pytest.raises(ValueError):
        rademacher(0)


def test_embed_examples():
    one = DyadicFunction([1.0])
    f = rademacher_embed([one], [0])
    np.testing.assert_array_equal(f.values, rademacher(1).values)
    g = rademacher_embed([one, one], [0, 1])
    assert h1_delta_norm(g) == pytest.approx(math.sqrt(2))
    with pytest.raises(MeasurabilityError):
        rademacher_embed([DyadicFunction([1.0, 2.0])], [0])
    with pytest.raises(ValueError):
        rademacher_embed([one, one], [1, 1])


def test_embed_of_sampled_characters():
    fam = [sample(AnalyticPoly.monomial(j), 1 << m) for j, m in ((1, 3), (3, 5), (9, 7))]
    f = rademacher_embed([DyadicFunction(s.values) for s in fam], [3, 5, 7])
    assert h1_delta_norm(f) == pytest.approx(mixed_l1l2_norm(fam), abs=1e-12)


def test_decompose_examples():
    dec = atomic_decompose(DyadicFunction([5.0] * 8))
    assert dec.atoms == [] and dec.residual_mean == 5.0
    dec = atomic_decompose(HAAR)
    assert dec.coeffs == [1.0]
    np.testing.assert_allclose(dec.atoms[0].values.values, HAAR.values)
    assert dec.atoms[0].interval == (0, 0)


def test_is_atom_examples():
    assert is_atom(HAAR)
    assert not is_atom(DyadicFunction([1.0, 1.0]))
    assert not is_atom(2 * HAAR)
    local = DyadicFunction([0, 0, 2, -2])
    assert is_atom(local)
    assert is_atom(Atom(1, 1, local))
    assert not is_atom(Atom(1, 0, local))
    assert not is_atom(DyadicFunction([0, 0, 3, -3]))


def test_json_round_trip():
    f = DyadicFunction([1 + 1j, 2, 3, -1j])
    assert np.array_equal(dyadic_from_json(dyadic_to_json(f)).values, f.values)
    with pytest.raises(ValueError):
        dyadic_from_json({"depth": 3, "values": [1, 2]})
    doc = decomposition_to_json(atomic_decompose(f))
    assert len(doc["coeffs"]) == len(doc["atoms"])


dyadic = st.integers(1, 8).flatmap(
    lambda L: st.lists(st.floats(-100, 100), min_size=1 << L, max_size=1 << L))


@settings(max_examples=80)
@given(dyadic)
def test_decomposition_is_sound(vals):
    f = DyadicFunction(vals)
    dec = atomic_decompose(f)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    assert np.max(np.abs(dec.reconstruct().values - f.values)) <= 1e-10 * scale
    assert all(is_atom(a) for a in dec.atoms)
    assert dec.coefficient_sum() <= C_DEC * h1_delta_norm(f) * (1 + 1e-12) + 1e-12 * scale


@settings(max_examples=60)
@given(st.lists(st.integers(0, 7), min_size=1, max_size=5, unique=True), st.integers(0, 2 ** 32 - 1))
def test_norm_transfer_identity(levels, seed):
    m = sorted(levels)
    rng = np.random.default_rng(seed)
    fam = [DyadicFunction(rng.standard_normal(1 << mk) + 1j * rng.standard_normal(1 << mk))
           for mk in m]
    f = rademacher_embed(fam, m)
    ref = mixed_l1l2_norm([StepFunction(g.values) for g in fam])
    assert h1_delta_norm(f) == pytest.approx(ref, rel=1e-12)
    D = differences(f)
    for n in range(1, f.depth + 1):
        if n - 1 not in m:
            assert np.max(np.abs(D[n - 1])) <= 1e-12


@given(dyadic, st.integers(0, 8))
def test_expectation_is_projection(vals, n):
    f = DyadicFunction(vals)
    n = min(n, f.depth)
    e = dyadic_expectation(f, n)
    np.testing.assert_allclose(dyadic_expectation(e, n).values, e.values, atol=1e-9)
    assert e.is_measurable(n)
