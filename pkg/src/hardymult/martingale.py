"""Dyadic martingales on [0, 1): filtration, differences, square function, atoms.

A ``DyadicFunction`` of depth ``L`` holds ``2**L`` values, one per dyadic cell
of length ``2**-L``; it is the terminal value of the martingale
``E_n f, n = 0..L``. The H1 norm used here is ``||S f||_1`` with
``S f = sqrt(sum_k |Delta_k f|^2)``; the mean ``E f`` is carried separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

#: Documented constant of ``atomic_decompose``: ``sum |c_k| <= C_DEC * ||f||_{H1}``.
#: Pieces at threshold ``2**j`` have L2 mass at most ``2**(j+1) |I|^{1/2}`` and
#: ``sum_j 2**(j+1) |{S > 2**j}| <= 4 ||S f||_1``.
C_DEC = 4.0

ATOM_TOL = 1e-12


class MeasurabilityError(ValueError):
    pass


class DyadicFunction:
    __slots__ = ("values",)

    def __init__(self, values):
        v = np.array(values, dtype=complex).ravel()
        if v.size == 0 or v.size & (v.size - 1):
            raise ValueError(f"need 2**L values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicFunction is immutable")

    @property
    def depth(self) -> int:
        return self.values.size.bit_length() - 1

    def refine(self, depth: int) -> "DyadicFunction":
        if depth < self.depth:
            raise ValueError("cannot refine to a coarser depth")
        return DyadicFunction(np.repeat(self.values, 1 << (depth - self.depth)))

    def mean(self) -> complex:
        return complex(np.mean(self.values))

    def is_measurable(self, level: int) -> bool:
        """Constant on every cell of length ``2**-level``."""
        if level >= self.depth:
            return True
        blocks = self.values.reshape(1 << level, -1)
        return bool(np.all(blocks == blocks[:, :1]))

    def __add__(self, other):
        L = max(self.depth, other.depth)
        return DyadicFunction(self.refine(L).values + other.refine(L).values)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, DyadicFunction):
            L = max(self.depth, other.depth)
            return DyadicFunction(self.refine(L).values * other.refine(L).values)
        return DyadicFunction(self.values * complex(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"DyadicFunction(depth={self.depth})"


def _block_means(values: np.ndarray, n: int) -> np.ndarray:
    return values.reshape(1 << n, -1).mean(axis=1)


def dyadic_expectation(f: DyadicFunction, n: int) -> DyadicFunction:
    """``E_n f``: block means over cells of length ``2**-n``, at full resolution."""
    if not 0 <= n <= f.depth:
        raise ValueError(f"level {n} outside 0..{f.depth}")
    width = 1 << (f.depth - n)
    return DyadicFunction(np.repeat(_block_means(f.values, n), width))


def expectations(f: DyadicFunction) -> np.ndarray:
    """Array ``E[n] = E_n f`` at full resolution, ``n = 0..L``."""
    L = f.depth
    out = np.empty((L + 1, f.values.size), dtype=complex)
    for n in range(L + 1):
        out[n] = np.repeat(_block_means(f.values, n), 1 << (L - n))
    return out


def differences(f: DyadicFunction) -> np.ndarray:
    """Array ``D[k-1] = Delta_k f`` for ``k = 1..L`` at full resolution."""
    return np.diff(expectations(f), axis=0)


def martingale_difference(f: DyadicFunction, k: int) -> DyadicFunction:
    """``Delta_k f = E_k f - E_{k-1} f``."""
    if not 1 <= k <= f.depth:
        raise ValueError(f"difference index {k} outside 1..{f.depth}")
    return DyadicFunction(dyadic_expectation(f, k).values - dyadic_expectation(f, k - 1).values)


def square_function(f: DyadicFunction) -> DyadicFunction:
    """Pointwise ``sqrt(sum_{k=1}^L |Delta_k f|^2)``."""
    if f.depth == 0:
        return DyadicFunction(np.zeros(1))
    d = differences(f)
    return DyadicFunction(np.sqrt(np.sum(d.real ** 2 + d.imag ** 2, axis=0)))


def h1_delta_norm(f: DyadicFunction) -> float:
    """``||S f||_1``; the mean of ``f`` is not included."""
    return float(np.mean(square_function(f).values.real))


def rademacher(j: int, depth: int | None = None) -> DyadicFunction:
    """``r_j``: +1 on the left half and -1 on the right half of each cell of level ``j-1``."""
    if j < 1:
        raise ValueError("Rademacher index starts at 1")
    depth = j if depth is None else depth
    if depth < j:
        raise ValueError("depth must be at least j")
    cells = np.arange(1 << depth) >> (depth - j)
    return DyadicFunction(np.where(cells % 2 == 0, 1.0, -1.0))


def rademacher_embed(family: Sequence[DyadicFunction], m: Sequence[int]) -> DyadicFunction:
    """``sum_k r_{m_k + 1} f_k`` for ``F_{m_k}``-measurable ``f_k``.

    Its only nonzero martingale differences are ``Delta_{m_k+1} = r_{m_k+1} f_k``.
    """
    m = [int(x) for x in m]
    if len(m) != len(family):
        raise ValueError("one level per member is required")
    if any(b <= a for a, b in zip(m, m[1:])) or (m and m[0] < 0):
        raise ValueError("levels must be nonnegative and strictly increasing")
    if not family:
        return DyadicFunction([0.0])
    depth = max(max(m) + 1, max(f.depth for f in family))
    acc = np.zeros(1 << depth, dtype=complex)
    for fk, mk in zip(family, m):
        if not fk.is_measurable(mk):
            raise MeasurabilityError(f"member is not F_{mk}-measurable")
        acc += rademacher(mk + 1, depth).values * fk.refine(depth).values
    return DyadicFunction(acc)


# -- atoms -------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """Function supported on the dyadic interval ``[i 2^-level, (i+1) 2^-level)``."""

    level: int
    index: int
    values: DyadicFunction

    @property
    def interval(self) -> tuple[int, int]:
        return (self.level, self.index)

    @property
    def length(self) -> float:
        return 2.0 ** -self.level


@dataclass
class AtomicDecomposition:
    coeffs: list[float] = field(default_factory=list)
    atoms: list[Atom] = field(default_factory=list)
    residual_mean: complex = 0.0
    depth: int = 0

    def reconstruct(self) -> DyadicFunction:
        acc = np.full(1 << self.depth, self.residual_mean, dtype=complex)
        for c, a in zip(self.coeffs, self.atoms):
            acc = acc + c * a.values.refine(self.depth).values
        return DyadicFunction(acc)

    def coefficient_sum(self) -> float:
        return float(sum(abs(c) for c in self.coeffs))


def _support_interval(values: np.ndarray) -> tuple[int, int] | None:
    """Smallest dyadic interval containing the support (``None`` if zero)."""
    nz = np.flatnonzero(values)
    if nz.size == 0:
        return None
    L = values.size.bit_length() - 1
    lo, hi = int(nz[0]), int(nz[-1])
    level = L
    while (lo >> (L - level)) != (hi >> (L - level)):
        level -= 1
    return level, lo >> (L - level)


def is_atom(a, interval: tuple[int, int] | None = None, tol: float = ATOM_TOL) -> bool:
    """Mean zero, supported on a dyadic interval ``I`` and ``||a||_2 <= |I|^{-1/2}``.

    ``a`` may be an :class:`Atom` (its own interval is used) or a bare
    :class:`DyadicFunction`, for which the smallest dyadic interval containing
    the support is used unless ``interval`` is given.
    """
    if isinstance(a, Atom):
        interval = a.interval if interval is None else interval
        a = a.values
    v = a.values
    scale = max(1.0, float(np.max(np.abs(v))))
    if abs(np.mean(v)) > tol * scale:
        return False
    L = a.depth
    if interval is None:
        interval = _support_interval(v)
        if interval is None:
            return True
    level, index = interval
    if level > L or not 0 <= index < (1 << level):
        return False
    width = 1 << (L - level)
    inside = np.zeros(v.size, dtype=bool)
    inside[index * width:(index + 1) * width] = True
    if np.any(v[~inside] != 0):
        return False
    l2 = math.sqrt(float(np.mean(np.abs(v) ** 2)))
    return l2 <= 2.0 ** (level / 2) * (1 + tol)


def atomic_decompose(f: DyadicFunction) -> AtomicDecomposition:
    """Stopping-time decomposition ``f - E f = sum_k c_k a_k``.

    For dyadic martingales ``|Delta_{n+1} f|`` is ``F_n``-measurable, so the
    running square function ``S_{n+1}`` is predictable and
    ``tau_j = min{n : S_{n+1} > 2**j}`` is a stopping time. The increments
    between consecutive stopping times, restricted to each maximal cell where
    ``tau_j`` stops, are mean zero on that cell and have L2 mass at most
    ``2**(j+1) |I|^{1/2}``. Atoms are normalized to ``||a||_2 = |I|^{-1/2}``.
    """
    L = f.depth
    mean = f.mean()
    dec = AtomicDecomposition(residual_mean=mean, depth=L)
    if L == 0:
        return dec
    E = expectations(f)
    D = np.diff(E, axis=0)
    S2 = np.cumsum(D.real ** 2 + D.imag ** 2, axis=0)
    S = np.sqrt(np.vstack([np.zeros((1, S2.shape[1])), S2]))  # S[n] = S_n, n = 0..L
    positive = S[S > 0]
    if positive.size == 0:
        return dec
    j_lo = math.floor(math.log2(float(positive.min()))) - 1
    j_hi = math.ceil(math.log2(float(S[-1].max()))) + 1
    F = E - E[0]  # F[n] = stopped martingale at deterministic time n, minus the mean
    cols = np.arange(S.shape[1])

    def stop(j):
        exceeded = S[1:] > 2.0 ** j  # row n: S_{n+1} > 2**j
        first = np.argmax(exceeded, axis=0)
        return np.where(exceeded.any(axis=0), first, L)

    tau = stop(j_lo)
    for j in range(j_lo, j_hi + 1):
        tau_next = stop(j + 1)
        piece = F[tau_next, cols] - F[tau, cols]
        stopped = tau < L
        if np.any(stopped):
            levels = tau[stopped]
            pos = cols[stopped]
            idx = pos >> (L - levels)
            for lev, i in sorted(set(zip(levels.tolist(), idx.tolist()))):
                width = 1 << (L - lev)
                vals = np.zeros(1 << L, dtype=complex)
                vals[i * width:(i + 1) * width] = piece[i * width:(i + 1) * width]
                mass = math.sqrt(float(np.mean(np.abs(vals) ** 2)))
                if mass == 0.0:
                    continue
                length = 2.0 ** -lev
                c = mass * math.sqrt(length)
                dec.coeffs.append(c)
                dec.atoms.append(Atom(lev, i, DyadicFunction(vals / c)))
        tau = tau_next
    return dec


# -- serialization -------------------------------------------------------------

def dyadic_to_json(f: DyadicFunction) -> dict:
    return {"depth": f.depth, "values": [[float(z.real), float(z.imag)] for z in f.values]}


def dyadic_from_json(doc: dict) -> DyadicFunction:
    vals = doc["values"]
    arr = np.array([complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
                    for v in vals])
    f = DyadicFunction(arr)
    if "depth" in doc and int(doc["depth"]) != f.depth:
        raise ValueError("depth does not match the number of values")
    return f


def decomposition_to_json(dec: AtomicDecomposition) -> dict:
    return {
        "coeffs": [float(c) for c in dec.coeffs],
        "residual_mean": [float(dec.residual_mean.real), float(dec.residual_mean.imag)],
        "atoms": [
            {"interval": {"m": a.level, "i": a.index},
             "values": dyadic_to_json(a.values)["values"]}
            for a in dec.atoms
        ],
    }
