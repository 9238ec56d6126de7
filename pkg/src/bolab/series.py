"""Lattice sums with a high-frequency constraint ``|n + m (+ l)| > N``."""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np

MAX_ORTHSPA_N = 512


def _range(N: int) -> np.ndarray:
    return np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])


def sum_prod(N: int) -> float:
    """``sum 1/(n^2 |m|)`` over ``0 < |n|,|m| <= N`` with ``|n + m| > N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    r = _range(N)
    n, m = np.meshgrid(r, r, indexing="ij")
    ok = np.abs(n + m) > N
    return float(np.sum(1.0 / (n[ok].astype(float) ** 2 * np.abs(m[ok]))))


def _harmonic_prefix(N: int) -> np.ndarray:
    """``H[k] = sum_{j=1}^k 1/j`` for ``k = 0..N``."""
    return np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, N + 1))])


def sum_orthspa(N: int) -> float:
    """``sum 1/(n^2 m^2 |l|)`` over ``0 < |n|,|m|,|l| <= N`` with ``|n + m + l| > N``.

    The ``l`` sum is closed with harmonic prefix sums for each ``s = n + m``:
    ``l > 0`` qualifies when ``l > N - s`` or ``l < -N - s``, and ``l = -t``
    when ``t > N + s`` or ``t < s - N``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > MAX_ORTHSPA_N:
        raise ValueError(f"N={N} exceeds the cost guard {MAX_ORTHSPA_N}")
    Hk = _harmonic_prefix(N)
    r = _range(N)
    n, m = np.meshgrid(r, r, indexing="ij")
    s = n + m

    def above(a):  # sum of 1/t over a < t <= N
        return Hk[N] - Hk[np.clip(a, 0, N)]

    def below(b):  # sum of 1/t over 1 <= t < b
        return Hk[np.clip(b - 1, 0, N)]

    pos = above(N - s) + below(-N - s)
    neg = above(N + s) + below(s - N)
    return float(np.sum((pos + neg) / (n.astype(float) ** 2 * m.astype(float) ** 2)))


def sum_prod_exact(N: int) -> Fraction:
    """Rational brute-force enumeration of ``sum_prod``."""
    r = [int(x) for x in _range(N)]
    return sum((Fraction(1, n * n * abs(m)) for n, m in product(r, r) if abs(n + m) > N), Fraction(0))


def sum_orthspa_exact(N: int) -> Fraction:
    """Rational brute-force enumeration of ``sum_orthspa``."""
    r = [int(x) for x in _range(N)]
    return sum((Fraction(1, n * n * m * m * abs(l)) for n, m, l in product(r, r, r) if abs(n + m + l) > N),
               Fraction(0))


SUMS = {"prod": sum_prod, "orthspa": sum_orthspa}


def normalized(value: float, N: int) -> float:
    """``value * N / ln N`` (undefined at ``N = 1``)."""
    return value * N / np.log(N) if N > 1 else float("nan")
