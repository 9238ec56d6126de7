"""Random Fourier series ``sum phi_n |n|^{-s} e^{inx}`` and their exact Gaussian moments.

Samples come from a counter-based generator (Philox) keyed by
``(seed, sample_index)``; mode ``n`` always consumes the same two draws of
that stream, so a sample is reproducible bit-for-bit whatever the batch
size, evaluation order or ``n_max`` prefix requested.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .energies import alpha
from .spectral import SpectralField, project_low, sobolev_norm_sq
from . import terms as T

DEFAULT_SIGMA_SQ = 1.0 / (4.0 * np.pi)
MAX_WICK_DEGREE = 8


@dataclass(frozen=True)
class GaussianEnsemble:
    """Gaussian measure with coefficient variance ``sigma_sq / |n|^{2s}``.

    The default ``sigma_sq = 1/(4 pi)`` makes ``E ||pi_N u||^2_{H^{s-1/2}} = alpha_N``
    under the 2pi-Parseval norm, so the harmonic centering is exact.
    """

    s: float
    n_max: int
    sigma_sq: float = DEFAULT_SIGMA_SQ
    seed: int = 0

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be positive")
        if not self.sigma_sq > 0:
            raise ValueError("sigma_sq must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def with_n_max(self, n_max: int) -> "GaussianEnsemble":
        return GaussianEnsemble(self.s, n_max, self.sigma_sq, self.seed)

    def to_dict(self) -> dict:
        return {"s": self.s, "n_max": self.n_max, "sigma_sq": self.sigma_sq, "seed": self.seed}


def standard_modes(seed: int, sample_index: int, n_max: int) -> np.ndarray:
    """Complex variables ``phi_1..phi_{n_max}`` with ``E|phi|^2 = 1``."""
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, sample_index], dtype=np.uint64)))
    z = gen.standard_normal(2 * n_max).reshape(n_max, 2)
    return (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)


def _scaled(e: GaussianEnsemble, phi: np.ndarray) -> np.ndarray:
    n = np.arange(1, e.n_max + 1, dtype=float)
    return np.sqrt(e.sigma_sq) * phi / n ** e.s


def sample_field(e: GaussianEnsemble, sample_index: int) -> SpectralField:
    return SpectralField(_scaled(e, standard_modes(e.seed, sample_index, e.n_max)))


def sample_batch(e: GaussianEnsemble, indices) -> SpectralField:
    """Stack of samples along a leading batch axis."""
    indices = list(indices)
    phi = np.array([standard_modes(e.seed, i, e.n_max) for i in indices])
    return SpectralField(_scaled(e, phi.reshape(len(indices), e.n_max)))


# exact moments --------------------------------------------------------------

@lru_cache(maxsize=None)
def _wick_counts(key: tuple) -> tuple:
    counts: dict[int, list[int]] = {}
    for mode, conj in key:
        if mode == 0:
            raise ValueError("mode 0 is not part of the ensemble")
        if mode < 0:
            mode, conj = -mode, not conj
        counts.setdefault(mode, [0, 0])[1 if conj else 0] += 1
    return tuple(tuple(v) for v in counts.values())


def wick_expectation(indices, sigma_sq=DEFAULT_SIGMA_SQ):
    """``E[prod phi_{n_i}^{(*)}]`` for independent circular Gaussians with ``E|phi|^2 = sigma_sq``.

    ``indices`` is a sequence of ``(mode, conjugated)`` pairs; ``phi_{-n}`` is
    read as ``conj(phi_n)``.  Per mode, ``E[phi^a conj(phi)^b] = delta_ab a! sigma_sq^a``.
    Passing a ``Fraction`` for ``sigma_sq`` gives an exact rational result.
    """
    key = tuple((int(m), bool(c)) for m, c in indices)
    if len(key) > MAX_WICK_DEGREE:
        raise ValueError(f"Wick enumeration is capped at {MAX_WICK_DEGREE} factors, got {len(key)}")
    value = 1
    for a, b in _wick_counts(key):
        if a != b:
            return 0 * sigma_sq
        value *= math.factorial(a) * sigma_sq ** a
    return value


def triple_set(N: int) -> np.ndarray:
    """All ordered ``(i, j, k)`` with ``i + j + k = 0`` and ``0 < |i|,|j|,|k| <= N``."""
    r = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
    i, j = np.meshgrid(r, r, indexing="ij")
    k = -(i + j)
    ok = (k != 0) & (np.abs(k) <= N)
    return np.stack([i[ok], j[ok], k[ok]], axis=1)


# statistics -----------------------------------------------------------------

def h_statistic(u: SpectralField, K: int, order: float):
    """``||pi_K u||^2_{H^order} - alpha_K``."""
    return sobolev_norm_sq(project_low(u, K), order) - alpha(K)


def p3_term(m: int, variant: str = "hilbert_middle") -> T.TermExpr:
    """Cubic term whose Hilbert-free shape is ``u d^m u d^{m+1} u``.

    ``plain`` has no Hilbert transform; ``hilbert_middle`` puts it on the
    ``d^m u`` factor (the placement found in the fourth conservation law);
    ``hilbert_last`` puts it on ``d^{m+1} u``.
    """
    middle = f"D{m}"
    last = f"D{m + 1}"
    if variant == "hilbert_middle":
        middle = f"H({middle})"
    elif variant == "hilbert_last":
        last = f"H({last})"
    elif variant != "plain":
        raise ValueError(f"unknown p3 variant {variant!r}")
    return T.parse(f"P(D0,{middle},{last})")


def term_symbol(p, modes: np.ndarray) -> np.ndarray:
    """Fourier symbol of a term for leaf mode assignments ``modes[..., leaf]``."""
    p = T.as_term(p)
    counter = [0]

    def walk(node):
        if isinstance(node, T.Deriv):
            i = counter[0]
            counter[0] += 1
            n = modes[..., i]
            return (1j * n) ** node.order, n
        if isinstance(node, T.Hilbert):
            val, n = walk(node.child)
            return val * (-1j * np.sign(n)), n
        val, total = 1, 0
        for f in node.factors:
            v, n = walk(f)
            val, total = val * v, total + n
        return val, total

    return walk(p)[0]


def _cubic_multiset_weights(p, s: float, M: int, N: int):
    """Coefficients of ``int p(pi_N u) - int p(pi_M u)`` on distinct monomials ``phi_a phi_b phi_c``."""
    trip = triple_set(N)
    if M > 0:
        trip = trip[np.abs(trip).max(axis=1) > M]
    if len(trip) == 0:
        return np.zeros((0, 3), dtype=int), np.zeros(0, dtype=complex)
    w = 2 * np.pi * term_symbol(p, trip) / np.prod(np.abs(trip).astype(float), axis=1) ** s
    keys, inverse = np.unique(np.sort(trip, axis=1), axis=0, return_inverse=True)
    inverse = inverse.ravel()
    weights = np.bincount(inverse, w.real, len(keys)) + 1j * np.bincount(inverse, w.imag, len(keys))
    return keys, weights


def exact_l2_distance(statistic: str, M: int, N: int, e: GaussianEnsemble, variant: str = "hilbert_middle") -> float:
    """Exact ``|| S_N - S_M ||_{L^2(mu)}`` for ``S = h`` or ``S = f_p3``.

    ``h`` uses the top-order norm ``H^{s-1/2}``.  ``f_p3`` needs an integer
    ``s = m + 1`` and sums ``|coefficient|^2 E|monomial|^2`` over distinct
    triple monomials; cross terms vanish by the orthogonality of triple
    products with zero-sum indices.
    """
    if M > N:
        raise ValueError("need M <= N")
    if statistic == "h":
        n = np.arange(M + 1, N + 1, dtype=float)
        mean = np.sum((4 * np.pi * e.sigma_sq - 1.0) / n)
        var = np.sum((4 * np.pi * e.sigma_sq) ** 2 / n ** 2)
        return float(np.sqrt(var + mean ** 2))
    if statistic == "f_p3":
        m = e.s - 1
        if m < 0 or m != int(m):
            raise ValueError("f_p3 needs an ensemble with integer s >= 1")
        if M == N:
            return 0.0
        keys, weights = _cubic_multiset_weights(p3_term(int(m), variant), e.s, M, N)
        moments = np.array([_monomial_second_moment(tuple(k)) for k in keys]) * e.sigma_sq ** 3
        return float(np.sqrt(np.sum(np.abs(weights) ** 2 * moments)))
    raise ValueError(f"unsupported statistic {statistic!r}; expected 'h' or 'f_p3'")


@lru_cache(maxsize=None)
def _monomial_second_moment(modes: tuple) -> int:
    """``E|prod phi_k|^2`` at unit variance, by Wick pairing."""
    return wick_expectation([(k, False) for k in modes] + [(k, True) for k in modes], 1)


def f_p3_statistic(u: SpectralField, K: int, m: int, variant: str = "hilbert_middle"):
    return T.evaluate_integral(p3_term(m, variant), project_low(u, K))


# Monte Carlo ------------------------------------------------------------------

def iter_batches(e: GaussianEnsemble, samples: int, batch: int = 256, start: int = 0):
    for lo in range(start, start + samples, batch):
        hi = min(lo + batch, start + samples)
        yield sample_batch(e, range(lo, hi))


def collect(statistic, e: GaussianEnsemble, samples: int, batch: int = 256, start: int = 0) -> np.ndarray:
    """Evaluate a batched statistic on samples ``start .. start+samples-1``."""
    out = [np.broadcast_to(np.asarray(statistic(u), dtype=float), u.batch_shape) for u in iter_batches(e, samples, batch, start)]
    return np.concatenate(out)


def mc_mean(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least two samples")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


def empirical_lq(statistic, e: GaussianEnsemble, q: float, samples: int, root: bool = False,
                 batch: int = 256, start: int = 0) -> tuple[float, float]:
    """Monte Carlo ``E|S|^q`` (or its ``1/q`` power) with a CLT standard error."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if samples < 2:
        raise ValueError("need at least two samples")
    est, se = mc_mean(np.abs(collect(statistic, e, samples, batch, start)) ** q)
    if not root:
        return est, se
    if est == 0:
        return 0.0, 0.0
    return est ** (1 / q), se * est ** (1 / q - 1) / q


def tail_probabilities(e: GaussianEnsemble, smoothness: float, p: float, lambdas, samples: int) -> np.ndarray:
    """Empirical ``P(||u||_{W^{smoothness,p}} > lambda)`` on a grid of thresholds."""
    from .spectral import lp_norm

    norms = collect(lambda u: lp_norm(u, smoothness, p), e, samples)
    lambdas = np.asarray(lambdas, dtype=float)
    return (norms[:, None] > lambdas[None, :]).mean(axis=0)


def moment_counter(indices) -> Counter:
    """Multiset of signed modes, handy for comparing index tuples."""
    return Counter(int(k) for k in indices)


def exact_fraction(x) -> Fraction:
    return Fraction(x)
