"""Translation, shift-average, grid expectation and Fourier multipliers on T.

``shift_average(f, N)`` is the mean of the ``N`` translates by ``j/N``;
``grid_expectation(f, N)`` is the conditional expectation onto functions
constant on the cells ``[k/N, (k+1)/N)``. Both act exactly on polynomials
(in coefficient space, closed-form cell integrals) and on step functions
whose partition is compatible with ``N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from .poly import (
    TWO_PI,
    BivariatePoly,
    Function,
    GridLike,
    StepFunction,
    TrigPoly,
    sample,
)

if TYPE_CHECKING:  # pragma: no cover
    from .symbols import IdemSet2D, Symbol


class OperatorError(ValueError):
    """Operator applied outside its exactness domain."""


def translate(f: Function, x0) -> Function:
    """``tau_{x0} f(x) = f(x - x0)``.

    For step functions ``x0 * P`` must be an integer; ``x0`` may be given as a
    ``Fraction`` to make that test exact.
    """
    if isinstance(f, StepFunction):
        slots = Fraction(x0) * f.pieces if not isinstance(x0, float) else x0 * f.pieces
        if isinstance(slots, Fraction):
            if slots.denominator != 1:
                raise OperatorError(f"shift {x0} is not aligned with {f.pieces} pieces")
            k = int(slots)
        else:
            k = round(slots)
            if abs(slots - k) > 1e-12:
                raise OperatorError(f"shift {x0} is not aligned with {f.pieces} pieces")
        return StepFunction(np.roll(f.values, k))
    phase = np.exp(-1j * TWO_PI * f.frequencies * float(x0))
    return f._like(f.coeffs * phase, f.offset)


def shift_average(f: Function, n: int) -> Function:
    """``E*_N f = (1/N) sum_{j<N} tau_{j/N} f``.

    On polynomials this is the multiplier keeping frequencies divisible by
    ``N``. On a step function with ``P`` pieces (``N | P``) the result is
    ``1/N``-periodic: the average of the ``N`` blocks of length ``P/N``.
    """
    n = int(n)
    if n < 1:
        raise OperatorError("N must be positive")
    if isinstance(f, StepFunction):
        if f.pieces % n:
            raise OperatorError(f"N={n} does not divide P={f.pieces}")
        period = f.values.reshape(n, f.pieces // n).mean(axis=0)
        return StepFunction(np.tile(period, n))
    keep = (f.frequencies % n) == 0
    return f._like(np.where(keep, f.coeffs, 0.0), f.offset)


def shift_average_by_rotation(f: StepFunction, n: int) -> StepFunction:
    """Literal ``(1/N) sum_j tau_{j/N} f`` by cyclic rotations (reference route)."""
    if f.pieces % n:
        raise OperatorError(f"N={n} does not divide P={f.pieces}")
    step = f.pieces // n
    acc = np.zeros(f.pieces, dtype=complex)
    for j in range(n):
        acc += np.roll(f.values, j * step)
    return StepFunction(acc / n)


def cell_mean_weights(freqs: np.ndarray, n: int) -> np.ndarray:
    """``N * integral_0^{1/N} e^{2 pi i j t} dt`` for each frequency ``j``."""
    freqs = np.asarray(freqs)
    out = np.ones(freqs.shape, dtype=complex)
    nz = (freqs % n) != 0
    j = freqs[nz].astype(float)
    out[nz] = n * (np.exp(1j * TWO_PI * j / n) - 1.0) / (1j * TWO_PI * j)
    # full periods inside a cell integrate to zero
    out[(freqs != 0) & ~nz] = 0.0
    return out


def grid_expectation(f: Function, n: int) -> StepFunction:
    """``E_N f``: exact mean of ``f`` over each cell ``[k/N, (k+1)/N)``.

    Polynomials use closed-form cell integrals; the cell means form the
    samples at ``k/N`` of the polynomial with coefficients ``c_j w_j``, which
    are folded modulo ``N`` and evaluated by one inverse FFT.
    """
    n = int(n)
    if n < 1:
        raise OperatorError("N must be positive")
    if isinstance(f, StepFunction):
        if f.pieces % n:
            raise OperatorError(f"N={n} does not divide P={f.pieces}")
        return StepFunction(f.values.reshape(n, f.pieces // n).mean(axis=1))
    freqs = f.frequencies
    weighted = f.coeffs * cell_mean_weights(freqs, n)
    folded = np.zeros(n, dtype=complex)
    np.add.at(folded, freqs % n, weighted)
    return StepFunction(n * np.fft.ifft(folded))


def apply_symbol(f: TrigPoly, mu: "Symbol") -> TrigPoly:
    """Multiplier: coefficient ``j`` becomes ``mu(j) c_j``."""
    if f.low < 0:
        raise OperatorError("symbols act on analytic polynomials")
    if f.high > mu.horizon:
        raise OperatorError(
            f"spectrum reaches {f.high} beyond the symbol horizon {mu.horizon}")
    return f._like(f.coeffs * mu.values_at(f.frequencies), f.offset)


def apply_symbol_2d(F: BivariatePoly, A: "IdemSet2D") -> BivariatePoly:
    """Idempotent multiplier: keep coefficients whose frequency lies in ``A``."""
    keep = A.contains_many(F.n1, F.n2)
    return BivariatePoly(F.n1[keep], F.n2[keep], F.coeffs[keep])


def abs_pointwise(f: Function, grid: GridLike | None = None) -> StepFunction:
    """``|f|`` at the grid nodes (step functions: on their own partition)."""
    if isinstance(f, StepFunction):
        if grid is not None:
            f = sample(f, grid)
        return StepFunction(np.abs(f.values))
    if grid is None:
        raise OperatorError("a grid is required to take |f| of a polynomial")
    return StepFunction(np.abs(sample(f, grid).values))


@dataclass(frozen=True)
class OperatorTag:
    """Name-qualified operator, used to label numbers in reports."""

    kind: str
    param: object = None
    inner: "OperatorTag | None" = None

    KINDS = ("translate", "shift_average", "grid_expectation", "symbol", "abs_then")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind in ("shift_average", "grid_expectation") and int(self.param) < 1:
            raise ValueError("N must be positive")

    def __str__(self):
        names = {"translate": "tau", "shift_average": "E*", "grid_expectation": "E",
                 "symbol": "T_mu", "abs_then": "abs"}
        if self.kind == "abs_then":
            return f"{self.inner}|.|"
        if self.kind == "symbol":
            return names[self.kind]
        return f"{names[self.kind]}_{self.param}"

    def __call__(self, f, grid: GridLike | None = None):
        if self.kind == "translate":
            return translate(f, self.param)
        if self.kind == "shift_average":
            return shift_average(f, self.param)
        if self.kind == "grid_expectation":
            return grid_expectation(f, self.param)
        if self.kind == "symbol":
            return apply_symbol(f, self.param)
        return self.inner(abs_pointwise(f, grid))


__all__ = [
    "OperatorError", "OperatorTag", "translate", "shift_average",
    "shift_average_by_rotation", "grid_expectation", "cell_mean_weights",
    "apply_symbol", "apply_symbol_2d", "abs_pointwise",
]
