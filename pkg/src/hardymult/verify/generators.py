"""Random inputs for the checks: coefficient vectors, polynomial families, dyadic data."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..poly import AnalyticPoly, TrigPoly

COEFF_KINDS = ("gauss", "decay", "sparse", "peak", "unimodular")


def random_coeffs(rng: np.random.Generator, n: int, kind: str | None = None) -> np.ndarray:
    """``n`` complex coefficients of a randomly chosen (or given) shape."""
    kind = kind or COEFF_KINDS[int(rng.integers(len(COEFF_KINDS)))]
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if kind == "decay":
        z = z * (1.0 + np.arange(n)) ** -rng.uniform(0.5, 2.0)
    elif kind == "sparse":
        mask = rng.random(n) < min(1.0, 3.0 / max(n, 1))
        mask[int(rng.integers(n))] = True
        z = np.where(mask, z, 0.0)
    elif kind == "peak":
        z = 0.1 * z
        z[int(rng.integers(n))] += 10.0
    elif kind == "unimodular":
        z = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    return z


def random_analytic(rng: np.random.Generator, degree: int, exact: bool = True,
                    kind: str | None = None) -> AnalyticPoly:
    """Random element of ``H1_degree``; with ``exact`` the top coefficient is nonzero."""
    c = random_coeffs(rng, degree + 1, kind)
    if exact and c[-1] == 0:
        c[-1] = 1.0
    return AnalyticPoly(c)


def random_block(rng: np.random.Generator, lo: int, hi: int, max_width: int | None = None,
                 kind: str | None = None) -> TrigPoly:
    """Random polynomial with spectrum in ``[lo, hi]`` (optionally a random sub-window)."""
    if max_width is not None and hi - lo + 1 > max_width:
        a = int(rng.integers(lo, hi - max_width + 2))
        lo, hi = a, a + max_width - 1
    return AnalyticPoly(random_coeffs(rng, hi - lo + 1, kind), lo)


def pack(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Complex arrays to one real vector (real parts, then imaginary parts)."""
    z = np.concatenate([np.asarray(a, dtype=complex).ravel() for a in arrays])
    return np.concatenate([z.real, z.imag])


def unpack(x: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    n = len(x) // 2
    z = x[:n] + 1j * x[n:]
    out, pos = [], 0
    for s in sizes:
        out.append(z[pos:pos + s])
        pos += s
    return out


DYADIC_KINDS = ("gauss", "sparse", "local", "smooth", "twovalued", "real")


def random_dyadic_values(rng: np.random.Generator, level: int,
                         kind: str | None = None) -> np.ndarray:
    """``2**level`` values of an ``F_level``-measurable function."""
    n = 1 << level
    kind = kind or DYADIC_KINDS[int(rng.integers(len(DYADIC_KINDS)))]
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if kind == "sparse":
        z = np.where(rng.random(n) < min(1.0, 2.0 / n + 0.05), z, 0.0)
    elif kind == "local":
        sub = int(rng.integers(0, level + 1))
        width = n >> sub
        start = int(rng.integers(1 << sub)) * width
        mask = np.zeros(n, dtype=bool)
        mask[start:start + width] = True
        z = np.where(mask, z, 0.0)
    elif kind == "smooth":
        z = np.cumsum(z) / np.sqrt(n)
    elif kind == "twovalued":
        z = np.where(rng.random(n) < 0.5, 1.0, float(rng.uniform(-2, 2)))
    elif kind == "real":
        z = z.real
    if not np.any(z):
        z[int(rng.integers(n))] = 1.0
    return np.asarray(z, dtype=complex)
