"""Trigonometric polynomials on the circle T = [0, 1), step functions and norms.

Conventions: a frequency ``j`` stands for the character ``exp(2*pi*i*j*t)``.
Polynomials are stored as a contiguous block of coefficients starting at an
integer ``offset``; analytic polynomials have ``offset >= 0``. Step functions
are piecewise constant on the uniform partition ``[i/P, (i+1)/P)``.

L1-type norms of polynomials are left-endpoint Riemann sums on power-of-two
grids. The a-priori error bound attached to them is the Lipschitz cell bound
``pi * span * sup|f| / M`` (Bernstein), with ``sup|f|`` estimated as twice the
largest sampled modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi

#: Default ratio between grid size and the number of frequencies in play.
DEFAULT_OVERSAMPLE = 8
#: Safety factor applied to the sampled maximum when estimating a sup-norm.
SUP_SAFETY = 2.0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 if n <= 1 else 1 << (int(n) - 1).bit_length()


class TrigPoly:
    """Trigonometric polynomial ``sum_j c[j] e^{2 pi i (offset + j) t}``.

    Instances are immutable. Arithmetic with another polynomial aligns the two
    coefficient blocks; multiplication is by scalars only.
    """

    __slots__ = ("coeffs", "offset")

    def __init__(self, coeffs, offset: int = 0):
        c = np.array(coeffs, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("a polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", _frozen(c))
        object.__setattr__(self, "offset", int(offset))
        self._validate()

    def _validate(self) -> None:
        pass

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    # -- basic shape --------------------------------------------------------
    @property
    def low(self) -> int:
        return self.offset

    @property
    def high(self) -> int:
        return self.offset + self.coeffs.size - 1

    @property
    def span(self) -> int:
        """Width of the stored frequency block, ``high - low``."""
        return self.coeffs.size - 1

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.low, self.high + 1)

    def coeff(self, j) -> np.ndarray | complex:
        """Fourier coefficient(s) at integer frequency ``j`` (zero off-block)."""
        j = np.asarray(j)
        idx = j - self.offset
        inside = (idx >= 0) & (idx < self.coeffs.size)
        out = np.where(inside, self.coeffs[np.clip(idx, 0, self.coeffs.size - 1)], 0.0)
        return complex(out) if out.ndim == 0 else out

    def _like(self, coeffs, offset):
        return type(self)(coeffs, offset)

    def trimmed(self) -> "TrigPoly":
        """Drop zero coefficients at both ends (keeps one coefficient if all vanish)."""
        nz = np.flatnonzero(self.coeffs)
        if nz.size == 0:
            return self._like([0.0], max(self.offset, 0) if isinstance(self, AnalyticPoly) else 0)
        return self._like(self.coeffs[nz[0] : nz[-1] + 1], self.offset + nz[0])

    # -- arithmetic -----------------------------------------------------------
    def _aligned(self, other: "TrigPoly"):
        lo = min(self.low, other.low)
        hi = max(self.high, other.high)
        a = np.zeros(hi - lo + 1, dtype=complex)
        b = np.zeros(hi - lo + 1, dtype=complex)
        a[self.low - lo : self.high - lo + 1] = self.coeffs
        b[other.low - lo : other.high - lo + 1] = other.coeffs
        return a, b, lo

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        a, b, lo = self._aligned(other)
        cls = AnalyticPoly if lo >= 0 and isinstance(self, AnalyticPoly) and isinstance(other, AnalyticPoly) else TrigPoly
        return cls(a + b, lo)

    def __sub__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return self._like(-self.coeffs, self.offset)

    def __mul__(self, scalar):
        if isinstance(scalar, TrigPoly):
            return NotImplemented
        return self._like(self.coeffs * complex(scalar), self.offset)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._like(self.coeffs / complex(scalar), self.offset)

    def __call__(self, t):
        return evaluate(self, t)

    def modulate(self, shift: int) -> "TrigPoly":
        """Multiply by ``e^{2 pi i shift t}``."""
        new = self.offset + int(shift)
        cls = AnalyticPoly if new >= 0 and isinstance(self, AnalyticPoly) else TrigPoly
        return cls(self.coeffs, new)

    def __repr__(self):
        return f"{type(self).__name__}(offset={self.offset}, span={self.span})"


class AnalyticPoly(TrigPoly):
    """Analytic polynomial: all frequencies are nonnegative.

    ``AnalyticPoly(c)`` has coefficients ``c[j]`` at frequency ``j``; the
    optional ``offset`` stores a polynomial whose spectrum sits high above 0
    without materializing the leading zeros.
    """

    __slots__ = ()

    def _validate(self) -> None:
        if self.offset < 0:
            raise ValueError("analytic polynomials have nonnegative frequencies")

    @property
    def degree(self) -> int:
        return self.high

    @classmethod
    def monomial(cls, j: int, c: complex = 1.0) -> "AnalyticPoly":
        return cls([c], j)

    @classmethod
    def constant(cls, c: complex) -> "AnalyticPoly":
        return cls([c])

    def dense(self) -> np.ndarray:
        """Coefficients at frequencies ``0..degree``."""
        out = np.zeros(self.degree + 1, dtype=complex)
        out[self.offset :] = self.coeffs
        return out


@dataclass(frozen=True, eq=False)
class BivariatePoly:
    """Sparse polynomial on the bitorus with spectrum in the positive quadrant.

    Coefficient ``coeffs[i]`` sits at frequency ``(n1[i], n2[i])``; duplicate
    frequencies are merged on construction.
    """

    n1: np.ndarray
    n2: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        n1 = np.asarray(self.n1, dtype=np.int64).ravel()
        n2 = np.asarray(self.n2, dtype=np.int64).ravel()
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if not (n1.size == n2.size == c.size):
            raise ValueError("frequency and coefficient arrays differ in length")
        if n1.size and (n1.min() < 0 or n2.min() < 0):
            raise ValueError("spectrum must lie in the closed positive quadrant")
        if n1.size:
            keys = np.stack([n1, n2], axis=1)
            uniq, inv = np.unique(keys, axis=0, return_inverse=True)
            merged = np.zeros(len(uniq), dtype=complex)
            np.add.at(merged, inv.ravel(), c)
            n1, n2, c = uniq[:, 0].copy(), uniq[:, 1].copy(), merged
        for name, arr in (("n1", n1), ("n2", n2), ("coeffs", c)):
            object.__setattr__(self, name, _frozen(arr))

    @classmethod
    def from_dense(cls, array) -> "BivariatePoly":
        a = np.asarray(array, dtype=complex)
        i, j = np.nonzero(a)
        return cls(i, j, a[i, j])

    def to_dense(self) -> np.ndarray:
        d1, d2 = self.degrees
        out = np.zeros((d1 + 1, d2 + 1), dtype=complex)
        out[self.n1, self.n2] = self.coeffs
        return out

    @property
    def degrees(self) -> tuple[int, int]:
        if self.n1.size == 0:
            return (0, 0)
        return int(self.n1.max()), int(self.n2.max())

    def __mul__(self, scalar):
        return BivariatePoly(self.n1, self.n2, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __call__(self, t1, t2):
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
        phase = np.multiply.outer(t1, self.n1) + np.multiply.outer(t2, self.n2)
        return np.exp(1j * TWO_PI * phase) @ self.coeffs


class StepFunction:
    """Function constant on each cell ``[i/P, (i+1)/P)``."""

    __slots__ = ("values",)

    def __init__(self, values):
        v = np.array(values, dtype=complex).ravel()
        if v.size == 0:
            raise ValueError("a step function needs at least one piece")
        object.__setattr__(self, "values", _frozen(v))

    def __setattr__(self, name, value):
        raise AttributeError("StepFunction is immutable")

    @property
    def pieces(self) -> int:
        return self.values.size

    def refine(self, pieces: int) -> "StepFunction":
        """Same function on a finer partition; ``pieces`` must be a multiple of P."""
        if pieces % self.pieces:
            raise ValueError(f"cannot refine {self.pieces} pieces to {pieces}")
        return StepFunction(np.repeat(self.values, pieces // self.pieces))

    def __add__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        p = math.lcm(self.pieces, other.pieces)
        return StepFunction(self.refine(p).values + other.refine(p).values)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return StepFunction(-self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, StepFunction):
            p = math.lcm(self.pieces, scalar.pieces)
            return StepFunction(self.refine(p).values * scalar.refine(p).values)
        return StepFunction(self.values * complex(scalar))

    __rmul__ = __mul__

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        idx = np.minimum((t * self.pieces).astype(np.int64), self.pieces - 1)
        return self.values[idx]

    def __repr__(self):
        return f"StepFunction(pieces={self.pieces})"


@dataclass(frozen=True)
class QuadratureGrid:
    """Equispaced nodes ``i/M`` with ``M`` a power of two."""

    size: int

    def __post_init__(self):
        if not is_power_of_two(int(self.size)):
            raise ValueError(f"grid size must be a power of two, got {self.size}")

    @classmethod
    def for_degree(cls, degree: int, oversample: int = DEFAULT_OVERSAMPLE,
                   divisible_by: Iterable[int] = ()) -> "QuadratureGrid":
        """Smallest admissible grid for polynomials up to ``degree``.

        Satisfies ``M >= max(4, oversample) * (degree + 1)`` and ``N | M`` for
        every ``N`` in ``divisible_by`` (each of which must be a power of two).
        """
        m = next_power_of_two(max(4, oversample) * (int(degree) + 1))
        for n in divisible_by:
            if not is_power_of_two(int(n)):
                raise ValueError(f"partition size {n} is not a power of two")
            m = max(m, int(n))
        return cls(m)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.size) / self.size

    def oversample(self, degree: int) -> float:
        return self.size / (degree + 1)


Function = Union[TrigPoly, StepFunction]
GridLike = Union[QuadratureGrid, int]


def _grid_size(grid: GridLike) -> int:
    return grid.size if isinstance(grid, QuadratureGrid) else int(grid)


def evaluate(f: TrigPoly, t) -> np.ndarray | complex:
    """Point evaluation ``sum_j c_j e^{2 pi i j t}``."""
    t = np.asarray(t, dtype=float)
    phase = np.exp(1j * TWO_PI * np.multiply.outer(t, f.frequencies))
    out = phase @ f.coeffs
    return complex(out) if out.ndim == 0 else out


def sample(f: Function, grid: GridLike) -> StepFunction:
    """Values of ``f`` at the nodes ``i/M`` as a step function with ``M`` pieces.

    Polynomials are sampled exactly by an inverse FFT; ``M`` must be at least
    the number of stored coefficients. Step functions are refined.
    """
    m = _grid_size(grid)
    if isinstance(f, StepFunction):
        return f.refine(m)
    if m < f.coeffs.size:
        raise ValueError(f"grid of {m} nodes is too small for {f.coeffs.size} coefficients")
    padded = np.zeros(m, dtype=complex)
    padded[: f.coeffs.size] = f.coeffs
    vals = m * np.fft.ifft(padded)
    if f.offset % m:
        vals = vals * np.exp(1j * TWO_PI * (f.offset % m) * np.arange(m) / m)
    return StepFunction(vals)


def _values_on(f: Function, m: int) -> np.ndarray:
    return sample(f, m).values


def sup_estimate(f: TrigPoly, grid: GridLike | None = None) -> float:
    """Sup-norm estimate: ``SUP_SAFETY`` times the largest sampled modulus."""
    m = _grid_size(grid) if grid is not None else next_power_of_two(4 * f.coeffs.size)
    return SUP_SAFETY * float(np.max(np.abs(_values_on(f, m))))


def sup_bound(f: TrigPoly) -> float:
    """Rigorous sup-norm bound ``sum |c_j|``."""
    return float(np.sum(np.abs(f.coeffs)))


def l2_norm(f: Function) -> float:
    """Exact L2 norm (Parseval for polynomials, cell average for steps)."""
    if isinstance(f, StepFunction):
        return math.sqrt(float(np.mean(np.abs(f.values) ** 2)))
    return math.sqrt(float(np.sum(np.abs(f.coeffs) ** 2)))


def _default_grid(f: TrigPoly) -> QuadratureGrid:
    return QuadratureGrid.for_degree(f.span)


def l1_norm(f: Function, grid: GridLike | None = None, with_error: bool = False):
    """L1 norm; exact for step functions, Riemann sum for polynomials.

    With ``with_error`` returns ``(value, bound)`` where ``bound`` is the
    a-priori quadrature error (zero for step functions).
    """
    if isinstance(f, StepFunction):
        val = float(np.mean(np.abs(f.values)))
        return (val, 0.0) if with_error else val
    m = _grid_size(grid) if grid is not None else _default_grid(f).size
    vals = np.abs(_values_on(f, m))
    val = float(np.mean(vals))
    if not with_error:
        return val
    err = math.pi * f.span * SUP_SAFETY * float(vals.max()) / m
    return val, err


def _common_size(family: Sequence[Function], grid: GridLike | None) -> int:
    if grid is not None:
        return _grid_size(grid)
    polys = [f for f in family if isinstance(f, TrigPoly)]
    steps = [f.pieces for f in family if isinstance(f, StepFunction)]
    m = math.lcm(*steps) if steps else 1
    if polys:
        need = QuadratureGrid.for_degree(max(p.span for p in polys)).size
        while m < need or m < max(p.coeffs.size for p in polys):
            m *= 2
    return m


def mixed_l1l2_norm(family: Sequence[Function], grid: GridLike | None = None,
                    with_error: bool = False):
    """``integral of sqrt(sum_k |f_k(t)|^2) dt`` for a finite family.

    Exact when every member is a step function (they are refined to a common
    partition); otherwise a Riemann sum on ``grid``. The error bound uses the
    Lipschitz constant ``sqrt(sum_k sup|f_k'|^2)`` of the integrand on cells.
    """
    family = list(family)
    if not family:
        return (0.0, 0.0) if with_error else 0.0
    m = _common_size(family, grid)
    sq = np.zeros(m)
    lip2 = 0.0
    for f in family:
        vals = _values_on(f, m)
        a2 = vals.real ** 2 + vals.imag ** 2
        sq += a2
        if with_error and isinstance(f, TrigPoly):
            lip2 += (TWO_PI * f.span * SUP_SAFETY * math.sqrt(float(a2.max()))) ** 2
    val = float(np.mean(np.sqrt(sq)))
    if not with_error:
        return val
    return val, math.sqrt(lip2) / (2 * m)


def fejer_kernel(n: int) -> TrigPoly:
    """Fejer kernel ``K_n`` with coefficients ``1 - |j|/n``, stored on ``|j| < n``."""
    if n < 1:
        raise ValueError("Fejer kernel needs n >= 1")
    j = np.arange(-(n - 1), n)
    return TrigPoly(1.0 - np.abs(j) / n, -(n - 1))


def derivative(f: TrigPoly) -> TrigPoly:
    """Coefficient ``j`` becomes ``2 pi i j c_j``."""
    return f._like(f.coeffs * (1j * TWO_PI * f.frequencies), f.offset)


def convolve(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """Convolution on T: coefficientwise product, kept on ``f``'s block."""
    return f._like(f.coeffs * g.coeff(f.frequencies), f.offset)


def l1_norm_2d(F: BivariatePoly, oversample: int = 2, with_error: bool = False):
    """L1 norm on the bitorus by a Riemann sum on a sheared lattice.

    A unimodular change of variables preserves Haar measure and maps the
    spectrum to ``A @ (n1, n2)``; of a few candidate matrices the one giving the
    smallest spread of transformed frequencies is used. Modulation does not
    change ``|F|``, so only spreads set the grid sizes.
    """
    if F.coeffs.size == 0 or not np.any(F.coeffs):
        return (0.0, 0.0) if with_error else 0.0
    best = None
    for mat in _UNIMODULAR:
        a = mat[0][0] * F.n1 + mat[0][1] * F.n2
        b = mat[1][0] * F.n1 + mat[1][1] * F.n2
        sa, sb = int(a.max() - a.min()), int(b.max() - b.min())
        ma = next_power_of_two(oversample * (sa + 1))
        mb = next_power_of_two(oversample * (sb + 1))
        if best is None or ma * mb < best[0]:
            best = (ma * mb, ma, mb, a - a.min(), b - b.min(), sa, sb)
    _, ma, mb, a, b, sa, sb = best
    grid = np.zeros((ma, mb), dtype=complex)
    np.add.at(grid, (a, b), F.coeffs)
    vals = np.abs(np.fft.ifft2(grid)) * (ma * mb)
    val = float(np.mean(vals))
    if not with_error:
        return val
    sup = SUP_SAFETY * float(vals.max())
    return val, math.pi * sup * (sa / ma + sb / mb)


_UNIMODULAR = (
    ((1, 0), (0, 1)),
    ((1, 0), (1, 1)),
    ((0, 1), (1, 1)),
    ((1, -1), (0, 1)),
    ((1, -2), (0, 1)),
    ((2, -1), (1, 0)),
)
