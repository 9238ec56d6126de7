"""Drift of the conservation laws along the truncated flow, and its decay in ``N``.

Along the truncated flow, ``v = pi_N u`` moves by ``-H v_xx - v v_x + w`` with
``w = pi_{>N}(v v_x)``.  Each ``E`` is conserved by the full vector field,
so ``d/dt E(v) = E'(v)[w]``.  The quadratic part pairs modes ``<= N`` with
modes ``> N`` and vanishes, which leaves the star substitution of the
remainder terms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import terms as T
from .energies import EnergySpec
from .gaussian import GaussianEnsemble, mc_mean, collect, p3_term
from .spectral import SpectralField, abs_derivative, project_low
from .terms import star_substitute, truncation_defect

MAX_MAJORANT_N = 512


@dataclass(frozen=True)
class DriftSpec:
    energy: EnergySpec
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")


def g_value(d: DriftSpec, u: SpectralField):
    """``d/dt E(pi_N u(t))`` at the current state, from remainder terms only."""
    v = project_low(u, d.N)
    total = np.zeros(v.batch_shape)
    for c, p in d.energy.remainder:
        total = total + c * star_substitute(p, d.N, v)
    return total


def quadratic_star(u: SpectralField, s: float, N: int):
    """Formal star term of ``||u||^2_{H^s}``: ``2 int |D|^s pi_N u |D|^s w``.

    Computed over the full mode range of ``w``; it is zero because the two
    factors live on disjoint mode sets.
    """
    v = project_low(u, N)
    w = truncation_defect(v, N)
    a = abs_derivative(v, s).resized(w.n_max).coeffs
    b = abs_derivative(w, s).coeffs
    return 4 * np.pi * np.sum(np.real(a * np.conj(b)), axis=-1)


# term families --------------------------------------------------------------

@dataclass(frozen=True)
class TermFamily:
    """A term whose star substitution should decay under ``mu_{m+1}``.

    ``exponents`` and ``pair`` describe the constrained coefficient sum that
    bounds the leading Leibniz piece: weights ``|j_i|^{-e_i}`` over zero-sum
    tuples with ``|j_a + j_b| > N`` for ``(a, b) = pair``.
    """

    kind: str
    m: int
    alphas: tuple
    term: T.TermExpr
    exponents: tuple
    pair: tuple

    @property
    def label(self) -> str:
        return f"{self.kind}({','.join(map(str, self.alphas))})"


def _check_tilde(term, alphas):
    term = T.as_term(term)
    got = sorted(leaf.order for leaf in T.leaves(term))
    if got != sorted(alphas):
        raise ValueError(f"term {term} has derivative orders {got}, expected {sorted(alphas)}")
    return term


def _plain(alphas) -> T.TermExpr:
    return T.Product(tuple(T.Deriv(a) for a in alphas))


def p3sing(m: int, variant: str = "hilbert_middle", term=None) -> TermFamily:
    """``u d^m u d^{m+1} u`` up to Hilbert transforms; needs ``m >= 2``."""
    if m < 2:
        raise ValueError(f"p3sing needs m >= 2, got m={m}")
    alphas = (0, m, m + 1)
    t = _check_tilde(term, alphas) if term is not None else p3_term(m, variant)
    return TermFamily("p3sing", m, alphas, t, (m + 1, m, 1, 0), (0, 1))


def p3(alpha: int, beta: int, gamma: int, term=None) -> TermFamily:
    """``d^alpha u d^beta u d^gamma u`` with sum ``2m+1`` and every order ``<= m``."""
    a, b, c = sorted((alpha, beta, gamma))
    total = a + b + c
    if total % 2 == 0:
        raise ValueError(f"p3 needs an odd order sum 2m+1, got {total}")
    m = (total - 1) // 2
    if m < 2:
        raise ValueError(f"p3 needs m >= 2, got m={m}")
    if c > m:
        raise ValueError(f"p3 needs max order <= m={m}, got {c}")
    t = _check_tilde(term, (a, b, c)) if term is not None else _plain((a, b, c))
    return TermFamily("p3", m, (a, b, c), t, (m + 1, m - a, m + 1 - b, m + 1 - c), (0, 1))


def quartic(alphas, m: int | None = None, term=None) -> TermFamily:
    """Four factors with order sum ``2m`` and every order ``<= m``."""
    al = tuple(sorted(alphas))
    if len(al) != 4:
        raise ValueError(f"quartic needs 4 orders, got {len(al)}")
    if m is None:
        if sum(al) % 2:
            raise ValueError(f"quartic needs an even order sum 2m, got {sum(al)}")
        m = sum(al) // 2
    if sum(al) != 2 * m:
        raise ValueError(f"quartic needs order sum 2m={2 * m}, got {sum(al)}")
    if max(al) > m:
        raise ValueError(f"quartic needs every order <= m={m}, got {max(al)}")
    if min(al) < 0:
        raise ValueError("orders must be non-negative")
    t = _check_tilde(term, al) if term is not None else _plain(al)
    e = tuple(m + 1 - a for a in al[:3]) + (m + 1, m - al[3])
    return TermFamily("quartic", m, al, t, e, (3, 4))


def multi(alphas, m: int, term=None) -> TermFamily:
    """At least five factors with order sum ``<= 2m-1`` and every order ``<= m``."""
    al = tuple(sorted(alphas))
    if len(al) < 5:
        raise ValueError(f"multi needs at least 5 factors, got {len(al)}")
    if sum(al) > 2 * m - 1:
        raise ValueError(f"multi needs order sum <= 2m-1={2 * m - 1}, got {sum(al)}")
    if max(al) > m:
        raise ValueError(f"multi needs every order <= m={m}, got {max(al)}")
    if min(al) < 0:
        raise ValueError("orders must be non-negative")
    t = _check_tilde(term, al) if term is not None else _plain(al)
    e = tuple(m + 1 - a for a in al[:-1]) + (m + 1, m - al[-1])
    n = len(al) + 1
    return TermFamily("multi", m, al, t, e, (n - 2, n - 1))


def make_family(kind: str, m: int | None = None, alphas=None, **kw) -> TermFamily:
    if kind == "p3sing":
        if m is None:
            raise ValueError("p3sing needs m")
        return p3sing(m, **kw)
    if alphas is None:
        raise ValueError(f"{kind} needs derivative orders")
    if kind == "p3":
        if len(alphas) != 3:
            raise ValueError(f"p3 needs 3 orders, got {len(alphas)}")
        fam = p3(*alphas, **kw)
        if m is not None and m != fam.m:
            raise ValueError(f"p3 orders {tuple(alphas)} fix m={fam.m}, not {m}")
        return fam
    if kind == "quartic":
        return quartic(alphas, m, **kw)
    if kind == "multi":
        if m is None:
            raise ValueError("multi needs m")
        return multi(alphas, m, **kw)
    raise ValueError(f"unknown family {kind!r}; expected p3sing, p3, quartic or multi")


def constrained_sum(exponents, pair, N: int) -> float:
    """``sum prod |j_i|^{-e_i}`` over zero-sum tuples in ``[-N, N] \\ {0}`` with ``|j_a + j_b| > N``.

    The paired convolution is restricted to ``|s| > N`` and contracted with
    the convolution of the remaining weights; cost ``O(len * N^2)``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > MAX_MAJORANT_N:
        raise ValueError(f"N={N} exceeds the cost guard {MAX_MAJORANT_N}")
    j = np.arange(-N, N + 1)
    absj = np.where(j == 0, 1, np.abs(j)).astype(float)

    def weight(e):
        w = absj ** (-float(e))
        w[N] = 0.0
        return w

    a, b = pair
    P = np.convolve(weight(exponents[a]), weight(exponents[b]))  # index s + 2N
    s = np.arange(-2 * N, 2 * N + 1)
    P[np.abs(s) <= N] = 0.0
    rest = [weight(e) for i, e in enumerate(exponents) if i not in pair]
    R = np.ones(1)
    for w in rest:
        R = np.convolve(R, w)
    K = (len(R) - 1) // 2
    # total = sum_s P(s) R(-s); R is symmetric
    lo = max(-2 * N, -K)
    hi = min(2 * N, K)
    return float(np.dot(P[lo + 2 * N:hi + 2 * N + 1], R[lo + K:hi + K + 1][::-1]))


def majorant(family: TermFamily, N: int) -> float:
    return constrained_sum(family.exponents, family.pair, N)


def brute_force_constrained_sum(exponents, pair, N: int) -> float:
    """Direct enumeration oracle for ``constrained_sum`` (small ``N`` only)."""
    from itertools import product

    r = [j for j in range(-N, N + 1) if j]
    total = 0.0
    for t in product(r, repeat=len(exponents) - 1):
        last = -sum(t)
        if last == 0 or abs(last) > N:
            continue
        full = t + (last,)
        if abs(full[pair[0]] + full[pair[1]]) <= N:
            continue
        total += float(np.prod([abs(x) ** (-float(e)) for x, e in zip(full, exponents)]))
    return total


# decay experiment ------------------------------------------------------------

@dataclass
class DecayRow:
    family: str
    m: int
    N: int
    q: float
    samples: int
    estimate: float
    stderr: float
    majorant: float
    seed: int

    FIELDS = ("family", "m", "N", "q", "samples", "seed", "estimate", "stderr", "majorant")

    def as_list(self) -> list:
        return [self.family, self.m, self.N, self.q, self.samples, self.seed,
                repr(self.estimate), repr(self.stderr), repr(self.majorant)]


def pstar_statistic(family: TermFamily, N: int):
    """Batched map ``u -> int p*_N(pi_N u) dx``."""
    def stat(u):
        return star_substitute(family.term, N, project_low(u, N))
    return stat


def pstar_decay_experiment(family: TermFamily, N_grid, q: float = 2.0, samples: int = 2000,
                           seed: int = 0, e: GaussianEnsemble | None = None,
                           sigma_sq: float | None = None) -> list[DecayRow]:
    """``|| int p*_N(pi_N u) ||_{L^q(mu_{m+1})}`` by Monte Carlo on an ``N`` grid.

    The same sample indices are reused at every ``N``; the generator makes
    the low modes of a sample independent of the cutoff, so the grid points
    see nested truncations of the same random series.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    rows = []
    for N in N_grid:
        if e is None:
            kw = {} if sigma_sq is None else {"sigma_sq": sigma_sq}
            ens = GaussianEnsemble(family.m + 1, N, seed=seed, **kw)
        else:
            ens = e.with_n_max(N)
        vals = np.abs(collect(pstar_statistic(family, N), ens, samples, batch=128)) ** q
        est, se = mc_mean(vals)
        if est > 0:
            est, se = est ** (1 / q), se * est ** (1 / q - 1) / q
        rows.append(DecayRow(family.label, family.m, N, q, samples, est, se, majorant(family, N), ens.seed))
    return rows


def write_rows(rows, path, header_line: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        w = csv.writer(fh)
        w.writerow(DecayRow.FIELDS)
        for r in rows:
            w.writerow(r.as_list())
