"""Multiplier symbols, lacunary bookkeeping and the idempotent set on Z_+^2.

Every symbol here is piecewise affine on a finite horizon, so it is stored by
its knots (integer frequencies) and exact rational knot values. A dense
sequence ``mu(0..n)`` is the special case with a knot at every integer. This
keeps the Stein quantities exact even when the horizon is far too large to
materialize.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import TrigPoly


class SymbolError(ValueError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


@dataclass(frozen=True)
class Symbol:
    """Piecewise-affine scalar sequence ``mu(0), ..., mu(horizon)``."""

    knots: tuple[int, ...]
    knot_values: tuple[Fraction, ...]

    def __post_init__(self):
        knots = tuple(int(k) for k in self.knots)
        vals = tuple(_frac(v) for v in self.knot_values)
        if len(knots) != len(vals) or not knots:
            raise SymbolError("knots and values must be nonempty and of equal length")
        if knots[0] != 0 or any(b <= a for a, b in zip(knots, knots[1:])):
            raise SymbolError("knots must start at 0 and increase strictly")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "knot_values", vals)

    @classmethod
    def from_values(cls, values: Sequence) -> "Symbol":
        return cls(tuple(range(len(values))), tuple(values))

    @property
    def horizon(self) -> int:
        return self.knots[-1]

    def __call__(self, n: int) -> Fraction:
        """Exact value at an integer frequency (zero beyond the horizon)."""
        n = int(n)
        if n < 0 or n > self.horizon:
            return Fraction(0)
        i = bisect.bisect_right(self.knots, n) - 1
        if self.knots[i] == n:
            return self.knot_values[i]
        a, b = self.knots[i], self.knots[i + 1]
        va, vb = self.knot_values[i], self.knot_values[i + 1]
        return va + (vb - va) * Fraction(n - a, b - a)

    def values_at(self, freqs) -> np.ndarray:
        """Float values at an array of frequencies; error beyond the horizon."""
        freqs = np.asarray(freqs)
        if freqs.size and (freqs.min() < 0 or freqs.max() > self.horizon):
            raise SymbolError("frequency outside the symbol horizon")
        k = np.asarray(self.knots, dtype=float)
        v = np.array([float(x) for x in self.knot_values])
        idx = np.clip(np.searchsorted(k, freqs, side="right") - 1, 0, len(k) - 1)
        nxt = np.minimum(idx + 1, len(k) - 1)
        span = np.where(nxt > idx, k[nxt] - k[idx], 1.0)
        w = (freqs - k[idx]) / span
        return v[idx] + (v[nxt] - v[idx]) * w

    def dense(self) -> np.ndarray:
        return self.values_at(np.arange(self.horizon + 1))


def stein_constant(mu: Symbol) -> Fraction:
    """``max(sup |mu(n)|, sup (n+1)|mu(n+1) - mu(n)|)`` over the horizon, exactly.

    On an affine piece ``[a, b]`` the increments are constant, so the scaled
    difference peaks at ``n = b - 1`` with value ``b * |slope|``; the sup of
    ``|mu|`` is attained at a knot.
    """
    if mu.horizon < 1:
        raise SymbolError("horizon must be at least 1")
    best = max(abs(v) for v in mu.knot_values)
    for a, b, va, vb in zip(mu.knots, mu.knots[1:], mu.knot_values, mu.knot_values[1:]):
        best = max(best, b * abs(vb - va) / (b - a))
    return best


@dataclass(frozen=True)
class LacunarySystem:
    """Lacunary sequence ``d_1 < d_2 < ...`` with its derived quantities.

    ``alpha`` is the exact ``min d_{k+1}/d_k - 1`` (``None`` when there is at
    most one term). ``m`` and ``M`` are filled only once an estimate of the
    Fejer constant ``c_alpha_est`` is attached.
    """

    d: tuple[int, ...]
    alpha: Fraction | None
    D: tuple[int, ...]
    c_alpha_est: float | None = None
    m: tuple[int, ...] = field(default=())
    M: tuple[int, ...] = field(default=())

    def __len__(self):
        return len(self.d)

    def D_before(self, k: int) -> int:
        """``D_{k-1}`` for 1-based ``k`` (``D_0 = 0``)."""
        return self.D[k - 2] if k >= 2 else 0

    def block_start(self, k: int) -> int:
        """``3 D_{k-1}``, the left end of the k-th symbol block."""
        return 3 * self.D_before(k)

    def with_c_alpha(self, c_alpha_est: float) -> "LacunarySystem":
        if not c_alpha_est > 0:
            raise SymbolError("C_alpha estimate must be positive")
        c = _frac(c_alpha_est)
        m = tuple(_ceil_log2(3 * c * dk) for dk in self.d)
        return replace(self, c_alpha_est=float(c_alpha_est), m=m, M=tuple(2 ** x for x in m))

    def alpha_float(self) -> float:
        return math.inf if self.alpha is None else float(self.alpha)

    @classmethod
    def empty(cls) -> "LacunarySystem":
        return cls((), None, ())


def _ceil_log2(x: Fraction) -> int:
    """Smallest integer ``m`` with ``2**m >= x`` (exact for rationals)."""
    if x <= 0:
        raise SymbolError("log of a nonpositive number")
    m = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** m < x:
        m += 1
    while Fraction(2) ** (m - 1) >= x:
        m -= 1
    return m


def lacunary_check(d: Sequence[int], c_alpha_est: float | None = None) -> LacunarySystem:
    """Validate a lacunary sequence and compute ``alpha`` and the partial sums ``D``."""
    d = tuple(int(x) for x in d)
    if not d:
        raise SymbolError("need at least one term")
    if d[0] < 1:
        raise SymbolError("terms must be positive integers")
    alpha = None
    for a, b in zip(d, d[1:]):
        if b <= a:
            raise SymbolError(f"sequence is not lacunary: {a} -> {b}")
        r = Fraction(b, a) - 1
        alpha = r if alpha is None else min(alpha, r)
    D = tuple(itertools.accumulate(d))
    if alpha is not None:
        bound = 1 + 1 / alpha
        for Dk, dk in zip(D, d):
            if Dk > bound * dk:
                raise AssertionError("partial-sum bound D_k <= (1 + 1/alpha) d_k failed")
    sys = LacunarySystem(d, alpha, D)
    return sys.with_c_alpha(c_alpha_est) if c_alpha_est is not None else sys


def _block_symbol(sys: LacunarySystem, nodal: Sequence[Sequence[int]]) -> Symbol:
    knots: list[int] = []
    vals: list[Fraction] = []
    for k, dk in enumerate(sys.d, start=1):
        start = sys.block_start(k)
        for j in range(3):
            knots.append(start + j * dk)
            vals.append(Fraction(nodal[k - 1][j]))
    # j = 3 of the last block; equals j = 0 of the (absent) next block
    knots.append(3 * sys.D[-1])
    vals.append(Fraction(0))
    return Symbol(tuple(knots), tuple(vals))


def build_mu_eps(sys: LacunarySystem, signs: Sequence[int]) -> Symbol:
    """Sign symbol: ``eps_k`` at ``3D_{k-1} + j d_k`` for ``j = 1, 2``, zero at ``j = 0``."""
    signs = [int(s) for s in signs]
    if len(signs) != len(sys.d):
        raise SymbolError("one sign per term is required")
    if any(s not in (-1, 1) for s in signs):
        raise SymbolError("signs must be +1 or -1")
    return _block_symbol(sys, [(0, s, s) for s in signs])


def build_K_hat(sys: LacunarySystem) -> Symbol:
    """Ramp symbol: zero at ``j = 0, 1``, one at ``j = 2``, zero again at ``3 D_k``."""
    return _block_symbol(sys, [(0, 0, 1)] * len(sys.d))


def stein_bound(sys: LacunarySystem) -> Fraction:
    """``max(1, 3 (1 + 1/alpha))``: the bound met by both block symbols."""
    if sys.alpha is None:
        # a single block: 3 D_1 / d_1 = 3
        return Fraction(3)
    return max(Fraction(1), 3 * (1 + 1 / sys.alpha))


def modulated_fejer(sys: LacunarySystem, k: int,
                    window: tuple[int, int] | None = None) -> TrigPoly:
    """Fejer kernel ``K_{d_k}`` centred at ``3 D_{k-1} + 2 d_k``.

    ``window = (lo, hi)`` keeps only the coefficients at frequencies
    ``lo..hi``; convolving a polynomial supported there is unchanged, and
    very long blocks need not be materialized.
    """
    if not 1 <= k <= len(sys.d):
        raise SymbolError(f"block index {k} out of range")
    dk = sys.d[k - 1]
    centre = sys.block_start(k) + 2 * dk
    lo, hi = centre - (dk - 1), centre + dk - 1
    if window is not None:
        lo, hi = max(lo, int(window[0])), min(hi, int(window[1]))
        if lo > hi:
            return TrigPoly([0.0], centre)
    n = np.arange(lo, hi + 1)
    return TrigPoly(1.0 - np.abs(n - centre) / dk, lo)


def block_range(sys: LacunarySystem, k: int, j0: int, j1: int) -> tuple[int, int]:
    """Frequencies ``[3D_{k-1} + j0 d_k, 3D_{k-1} + j1 d_k]``."""
    start, dk = sys.block_start(k), sys.d[k - 1]
    return start + j0 * dk, start + j1 * dk


def split_subsequences(sys: LacunarySystem, q: int) -> list[LacunarySystem]:
    """The ``q`` stride-``q`` subsequences ``(d_{r + kq})_k``, ``r = 1..q``."""
    if q < 1:
        raise SymbolError("q must be positive")
    out = []
    for r in range(q):
        sub = sys.d[r::q]
        if not sub:
            out.append(LacunarySystem.empty())
            continue
        s = lacunary_check(sub)
        if sys.c_alpha_est is not None:
            s = s.with_c_alpha(sys.c_alpha_est)
        out.append(s)
    return out


@dataclass(frozen=True)
class IdemSet2D:
    """``A = union_k {(n1, n2): n1 + n2 = d_k, N_k | n1}``."""

    d: tuple[int, ...]
    N: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(x) for x in self.d)
        N = tuple(int(x) for x in self.N)
        if len(d) != len(N):
            raise SymbolError("d and N must have the same length")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise SymbolError("d must increase strictly")
        if any(n < 1 for n in N):
            raise SymbolError("N_k must be positive")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "N", N)

    def contains(self, n1: int, n2: int) -> bool:
        return idem_contains(self, n1, n2)

    def contains_many(self, n1, n2) -> np.ndarray:
        n1 = np.asarray(n1, dtype=np.int64)
        n2 = np.asarray(n2, dtype=np.int64)
        total = n1 + n2
        out = np.zeros(n1.shape, dtype=bool)
        for dk, Nk in zip(self.d, self.N):
            out |= (total == dk) & (n1 % Nk == 0)
        return out


def idem_contains(A: IdemSet2D, n1: int, n2: int) -> bool:
    if n1 < 0 or n2 < 0:
        raise SymbolError("frequencies must be nonnegative")
    return any(n1 + n2 == dk and n1 % Nk == 0 for dk, Nk in zip(A.d, A.N))


# -- JSON documents ---------------------------------------------------------

def system_to_json(sys: LacunarySystem, symbol: Symbol | None = None,
                   dense_limit: int = 1 << 16) -> dict:
    doc = {
        "d": list(sys.d),
        "alpha": None if sys.alpha is None else str(sys.alpha),
        "D": list(sys.D),
        "m": list(sys.m),
        "C_alpha_est": sys.c_alpha_est,
    }
    if symbol is not None:
        doc["knots"] = [[k, str(v)] for k, v in zip(symbol.knots, symbol.knot_values)]
        doc["symbol_values"] = (
            [float(x) for x in symbol.dense()] if symbol.horizon < dense_limit else None)
    return doc


def system_from_json(doc: dict) -> tuple[LacunarySystem, Symbol | None]:
    sys = lacunary_check(doc["d"], doc.get("C_alpha_est"))
    if doc.get("alpha") is not None and Fraction(doc["alpha"]) != sys.alpha:
        raise SymbolError("alpha in document disagrees with d")
    symbol = None
    if doc.get("knots"):
        symbol = Symbol(tuple(k for k, _ in doc["knots"]),
                        tuple(Fraction(v) for _, v in doc["knots"]))
    elif doc.get("symbol_values") is not None:
        symbol = Symbol.from_values(doc["symbol_values"])
    return sys, symbol


def idem_to_json(A: IdemSet2D) -> dict:
    return {"d": list(A.d), "N": list(A.N)}
