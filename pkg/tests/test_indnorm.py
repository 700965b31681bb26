import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardymult.indnorm import (
    BudgetExceeded,
    MAX_SIGNS,
    ind_norm,
    ind_norm_cells,
    ind_norm_exact,
    ind_norm_mc,
    l1_l1_norm,
    l2_l2_norm,
    rademacher_average_exact,
    square_function_norm,
)
from hardymult.poly import StepFunction, mixed_l1l2_norm

HALF = StepFunction([1.0, 0.0])
PAIR = [HALF, HALF]


def test_exact_examples():
    f = StepFunction([1.0, -2.0, 0.5, 0.0])
    assert ind_norm_exact([f]) == pytest.approx(np.mean(np.abs(f.values)))
    assert ind_norm_exact([StepFunction([3.0]), StepFunction([4.0])]) == 5.0
    assert ind_norm_exact(PAIR) == pytest.approx(math.sqrt(2) / 4 + 0.5, abs=1e-15)
    assert ind_norm_exact([]) == 0.0


def test_budget():
    fam = [StepFunction(np.arange(16.0)) for _ in range(3)]
    assert ind_norm_cells(fam) == 16 ** 3
    with pytest.raises(BudgetExceeded):
        ind_norm_exact(fam, budget=100)
    assert ind_norm(fam, budget=100, samples=1000, seed=1) > 0


def test_mc_examples():
    mean, err = ind_norm_mc([StepFunction([3.0]), StepFunction([4.0])], 100, seed=9)
    assert mean == 5.0 and err == 0.0
    f = StepFunction(np.linspace(-1, 2, 32))
    mean, err = ind_norm_mc([f], 20000, seed=3)
    assert abs(mean - np.mean(np.abs(f.values))) <= 4 * err
    mean, err = ind_norm_mc(PAIR, 20000, seed=4)
    assert abs(mean - (math.sqrt(2) / 4 + 0.5)) <= 4 * err
    with pytest.raises(ValueError):
        ind_norm_mc(PAIR, 1, seed=0)


def test_mc_shares_streams_by_member_id():
    rng = np.random.default_rng(0)
    fam = [StepFunction(rng.standard_normal(8)) for _ in range(3)]
    whole = ind_norm_mc(fam, 500, 11, member_ids=[0, 1, 2])[0]
    parts = ind_norm_mc(fam[:2], 500, 11, [0, 1])[0] + ind_norm_mc(fam[2:], 500, 11, [2])[0]
    assert whole <= parts + 1e-12


def test_rademacher_examples():
    f = StepFunction([1.0, -3.0])
    assert rademacher_average_exact([f]) == pytest.approx(2.0)
    one = StepFunction([1.0])
    assert rademacher_average_exact([one, one]) == 1.0
    assert rademacher_average_exact([one, one]) / square_function_norm([one, one]) == pytest.approx(
        1 / math.sqrt(2), abs=1e-15)
    a, b = StepFunction([1.0, 0.0]), StepFunction([0.0, 1.0])
    assert rademacher_average_exact([a, b]) == pytest.approx(square_function_norm([a, b]))
    with pytest.raises(ValueError):
        rademacher_average_exact([one] * (MAX_SIGNS + 1))


def test_rademacher_against_full_enumeration():
    rng = np.random.default_rng(5)
    fam = [StepFunction(rng.standard_normal(4) + 1j * rng.standard_normal(4)) for _ in range(4)]
    vals = np.stack([f.values for f in fam])
    total = 0.0
    for bits in range(16):
        eps = np.array([1 - 2 * ((bits >> k) & 1) for k in range(4)])
        total += np.mean(np.abs(eps @ vals))
    assert rademacher_average_exact(fam) == pytest.approx(total / 16, rel=1e-14)


family = st.integers(1, 5).flatmap(lambda n: st.lists(
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
             min_size=4, max_size=4), min_size=n, max_size=n))


@settings(max_examples=60)
@given(family)
def test_khintchine_bracket(fam):
    steps = [StepFunction(v) for v in fam]
    sq = square_function_norm(steps)
    if sq == 0:
        return
    r = rademacher_average_exact(steps) / sq
    assert 1 / math.sqrt(2) - 1e-9 <= r <= 1 + 1e-9


@settings(max_examples=60)
@given(family)
def test_ind_norm_between_l2_and_l1(fam):
    steps = [StepFunction(v) for v in fam]
    val = ind_norm_exact(steps)
    assert val <= l1_l1_norm(steps) + 1e-9
    # E sqrt(sum) <= sqrt(E sum)
    assert val <= l2_l2_norm(steps) + 1e-9
    assert square_function_norm(steps) == pytest.approx(mixed_l1l2_norm(steps), rel=1e-12, abs=1e-12)
