"""The independent-sum norm and exact Rademacher averages.

For a finite family ``(f_k)`` of step functions on [0, 1),
``||(f_k)||_ind = E sqrt(sum_k |f_k(w_k)|^2)`` with ``w_k`` independent and
uniform. Exact evaluation enumerates the joint distribution of the squared
moduli; each member is first compressed to its distinct values, so the cost
is the product of distinct-value counts rather than of partition sizes.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .poly import StepFunction

DEFAULT_BUDGET = 1 << 24
MAX_SIGNS = 20


class BudgetExceeded(RuntimeError):
    """Exact enumeration too large; use :func:`ind_norm_mc`."""


def _distribution(f: StepFunction) -> tuple[np.ndarray, np.ndarray]:
    sq = np.abs(f.values) ** 2
    vals, counts = np.unique(sq, return_counts=True)
    return vals, counts / f.pieces


def ind_norm_cells(family: Sequence[StepFunction]) -> int:
    """Number of product cells exact enumeration has to visit (before merging)."""
    return math.prod(np.unique(np.abs(f.values) ** 2).size for f in family)


def ind_norm_exact(family: Sequence[StepFunction], budget: int = DEFAULT_BUDGET) -> float:
    """Exact ``||(f_k)||_ind`` by enumerating the product of value distributions."""
    family = list(family)
    if not family:
        return 0.0
    if ind_norm_cells(family) > budget:
        raise BudgetExceeded(
            f"{ind_norm_cells(family)} product cells exceed the budget of {budget}")
    sums = np.zeros(1)
    weights = np.ones(1)
    for f in family:
        vals, w = _distribution(f)
        sums = np.add.outer(sums, vals).ravel()
        weights = np.multiply.outer(weights, w).ravel()
        # merge equal partial sums; keeps the enumeration exact and small
        sums, inv = np.unique(sums, return_inverse=True)
        weights = np.bincount(inv.ravel(), weights=weights, minlength=sums.size)
    return float(np.sum(weights * np.sqrt(sums)))


def ind_norm_mc(family: Sequence[StepFunction], samples: int, seed: int,
                member_ids: Sequence[int] | None = None) -> tuple[float, float]:
    """Monte Carlo ``||(f_k)||_ind`` with its standard error.

    The coordinate of member ``k`` is drawn from a stream keyed by
    ``(seed, member_ids[k])``, so sub-families that share ids reuse the same
    coordinates and the result does not depend on evaluation order.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    family = list(family)
    if not family:
        return 0.0, 0.0
    ids = range(len(family)) if member_ids is None else member_ids
    acc = np.zeros(samples)
    for f, k in zip(family, ids):
        rng = np.random.default_rng([int(seed), int(k)])
        cell = rng.integers(0, f.pieces, size=samples)
        v = f.values[cell]
        acc += v.real ** 2 + v.imag ** 2
    r = np.sqrt(acc)
    return float(np.mean(r)), float(np.std(r, ddof=1) / math.sqrt(samples))


def ind_norm(family: Sequence[StepFunction], budget: int = DEFAULT_BUDGET,
             samples: int = 1 << 15, seed: int = 0,
             member_ids: Sequence[int] | None = None) -> float:
    """Exact when within budget, otherwise the Monte Carlo estimate."""
    try:
        return ind_norm_exact(family, budget)
    except BudgetExceeded:
        return ind_norm_mc(family, samples, seed, member_ids)[0]


def l1_l1_norm(family: Sequence[StepFunction]) -> float:
    """``sum_k ||f_k||_1``."""
    return float(sum(np.mean(np.abs(f.values)) for f in family))


def l2_l2_norm(family: Sequence[StepFunction]) -> float:
    """``sqrt(sum_k ||f_k||_2^2)``."""
    return math.sqrt(float(sum(np.mean(np.abs(f.values) ** 2) for f in family)))


def _common_values(family: Sequence[StepFunction]) -> np.ndarray:
    p = math.lcm(*[f.pieces for f in family])
    return np.stack([f.refine(p).values for f in family])


def rademacher_average_exact(family: Sequence[StepFunction], chunk: int = 256) -> float:
    """``2^-n sum_{eps in {+-1}^n} ||sum_k eps_k f_k||_1``, exactly.

    ``eps`` and ``-eps`` give the same norm, so only sign patterns with
    ``eps_1 = +1`` are enumerated.
    """
    family = list(family)
    n = len(family)
    if n == 0:
        return 0.0
    if n > MAX_SIGNS:
        raise ValueError(f"{n} members exceed the enumeration limit {MAX_SIGNS}")
    vals = _common_values(family)
    patterns = np.arange(1 << (n - 1))
    bits = (patterns[:, None] >> np.arange(n - 1)[None, :]) & 1
    signs = np.hstack([np.ones((patterns.size, 1)), 1.0 - 2.0 * bits])
    total = 0.0
    for start in range(0, patterns.size, chunk):
        block = signs[start:start + chunk] @ vals
        total += float(np.sum(np.mean(np.abs(block), axis=1)))
    return total / patterns.size


def square_function_norm(family: Sequence[StepFunction]) -> float:
    """``|| sqrt(sum_k |f_k|^2) ||_1`` on the common partition."""
    vals = _common_values(family)
    return float(np.mean(np.sqrt(np.sum(vals.real ** 2 + vals.imag ** 2, axis=0))))
