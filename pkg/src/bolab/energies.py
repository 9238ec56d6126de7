"""Conservation laws of the Benjamin-Ono equation and the cutoff density built on them."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import terms as T
from .spectral import SpectralField, abs_derivative, project_low, sobolev_norm_sq


@dataclass(frozen=True)
class EnergySpec:
    """``E(u) = ||u||^2_{H^s} + sum_i c_i int p_i(u) dx`` with every ``p_i`` at least cubic."""

    s: float
    remainder: tuple = ()

    def __post_init__(self):
        if self.s < 0 or (2 * self.s) != int(2 * self.s):
            raise ValueError(f"quadratic order must be a non-negative half-integer, got {self.s}")
        items = tuple((float(c), T.as_term(p)) for c, p in self.remainder)
        for _, p in items:
            n = len(T.leaves(p))
            if n < 3:
                raise ValueError(f"remainder term {p} has homogeneity {n} < 3")
        object.__setattr__(self, "remainder", items)

    @property
    def k(self) -> int:
        return int(round(2 * self.s))

    def to_dict(self) -> dict:
        return {"s": self.s, "terms": [{"c": c, "expr": str(p)} for c, p in self.remainder]}

    @classmethod
    def from_dict(cls, data: dict) -> "EnergySpec":
        try:
            return cls(float(data["s"]), tuple((t["c"], t["expr"]) for t in data.get("terms", [])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed energy spec: {exc}") from None


def read_energy(path) -> EnergySpec:
    return EnergySpec.from_dict(json.loads(Path(path).read_text()))


def write_energy(spec: EnergySpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=1) + "\n")


_U5 = "P(D0,D0,D0,D0,D0)"
_U6 = "P(D0,D0,D0,D0,D0,D0)"

_BUILTIN = {
    0: (0.0, []),
    1: (0.5, [(Fraction(1, 3), "P(D0,D0,D0)")]),
    2: (1.0, [
        (Fraction(3, 4), "P(D0,D0,H(D1))"),
        (Fraction(1, 8), "P(D0,D0,D0,D0)"),
    ]),
    3: (1.5, [
        (Fraction(3, 2), "P(D0,D1,D1)"),
        (Fraction(1, 2), "P(D0,H(D1),H(D1))"),
        (Fraction(1, 3), "P(D0,D0,D0,H(D1))"),
        (Fraction(1, 4), "P(D0,D0,H(P(D0,D1)))"),
        (Fraction(1, 20), _U5),
    ]),
    4: (2.0, [
        (Fraction(-5, 4), "P(D1,D1,H(D1))"),
        (Fraction(-5, 2), "P(D0,D2,H(D1))"),
        (Fraction(25, 16), "P(D0,D0,D1,D1)"),
        (Fraction(5, 16), "P(D0,D0,H(D1),H(D1))"),
        (Fraction(5, 8), "P(D0,H(D1),H(P(D0,D1)))"),
        (Fraction(5, 32), "P(D0,D0,D0,D0,H(D1))"),
        (Fraction(5, 24), "P(D0,D0,D0,H(P(D0,D1)))"),
        (Fraction(1, 48), _U6),
    ]),
}


def builtin_energy(k: int, printed: bool = False) -> EnergySpec:
    """``E_{k/2}`` for ``k = 0..4``; higher laws must be supplied as data.

    ``printed=True`` returns the commonly quoted ``E_{3/2}`` whose remainder
    carries the opposite overall sign; it is not conserved and is kept only
    for comparison.
    """
    if k not in _BUILTIN:
        raise ValueError(f"no built-in conservation law for k={k} (available: 0..4)")
    s, rem = _BUILTIN[k]
    sign = -1 if (printed and k == 3) else 1
    return EnergySpec(s, tuple((sign * float(c), p) for c, p in rem))


def quadratic_part(spec: EnergySpec, u: SpectralField):
    return sobolev_norm_sq(u, spec.s, homogeneous=True)


def remainder_value(spec: EnergySpec, u: SpectralField):
    total = np.zeros(u.batch_shape)
    for c, p in spec.remainder:
        total = total + c * T.evaluate_integral(p, u)
    return total


def energy_value(spec: EnergySpec, u: SpectralField):
    return quadratic_part(spec, u) + remainder_value(spec, u)


def energy_rate(spec: EnergySpec, u: SpectralField, w: SpectralField):
    """Derivative of ``E`` at ``u`` in the direction ``w``."""
    quad = 2.0 * _pairing(abs_derivative(u, spec.s), abs_derivative(w, spec.s))
    rem = np.zeros(u.batch_shape)
    for c, p in spec.remainder:
        rem = rem + c * T.directional_derivative(p, u, w)
    return quad + rem


def _pairing(a: SpectralField, b: SpectralField):
    n = min(a.n_max, b.n_max)
    return 2 * np.pi * (a.mean * b.mean + 2.0 * np.sum(
        np.real(a.coeffs[..., :n] * np.conj(b.coeffs[..., :n])), axis=-1))


def matches_structure(spec: EnergySpec) -> bool:
    """Check every remainder term against the admissible shapes for ``E_{k/2}``."""
    k = spec.k
    for _, p in spec.remainder:
        j, sup, tot = T.structural_norms(p)
        orders = sorted(leaf.order for leaf in T.leaves(p))
        if k % 2 == 0:
            n = k // 2
            special = [sorted([0, n - 1, n])]
            generic = tot == 2 * n - j + 2 and sup <= n - 1
        else:
            n = (k - 1) // 2
            special = [sorted([0, n, n]), sorted([1, n - 1, n]), sorted([0, 0, n - 1, n])]
            generic = tot == 2 * n - j + 3 and sup <= n - 1
        if not (generic or orders in special):
            return False
    return True


# cutoff density -----------------------------------------------------------

def alpha(N: int) -> float:
    """Harmonic renormalization ``sum_{n=1}^N 1/n``."""
    if N < 1:
        raise ValueError("alpha needs N >= 1")
    return float(np.sum(1.0 / np.arange(1, N + 1)))


def chi(x):
    """Trapezoid cutoff: 1 on [-1, 1], 0 outside (-2, 2), linear in between."""
    return np.clip(2.0 - np.abs(np.asarray(x, dtype=float)), 0.0, 1.0)


@dataclass(frozen=True)
class CutoffSpec:
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"cutoff scale must be positive, got {self.R}")

    def __call__(self, x):
        return chi(np.asarray(x, dtype=float) / self.R)


def density_factors(k: int, N: int, cutoff: CutoffSpec, u: SpectralField, energies=None) -> dict:
    """All ingredients of the cutoff density at ``pi_N u``.

    Returns the cutoff arguments, the renormalized top-order norm
    ``h_N = ||pi_N u||^2_{H^{(k-1)/2}} - alpha_N`` and the density itself.
    """
    if k < 2:
        raise ValueError("the cutoff density is defined for k >= 2")
    energies = energies or {}
    specs = [energies.get(j) or builtin_energy(j) for j in range(k + 1)]
    v = project_low(u, N)
    a = alpha(N)
    args = [energy_value(specs[j], v) for j in range(k - 1)]
    top = energy_value(specs[k - 1], v) - a
    weight = np.ones(v.batch_shape)
    for x in args:
        weight = weight * cutoff(x)
    weight = weight * cutoff(top)
    rem = remainder_value(specs[k], v)
    return {
        "args": args + [top],
        "h": sobolev_norm_sq(v, (k - 1) / 2) - a,
        "remainder": rem,
        "density": _safe_weighted_exp(weight, rem),
    }


def density_F(k: int, N: int, cutoff: CutoffSpec, u: SpectralField, energies=None):
    """Cutoff-weighted density of the candidate invariant measure at truncation ``N``."""
    return density_factors(k, N, cutoff, u, energies)["density"]


def _safe_weighted_exp(weight, rem):
    """``weight * exp(-rem)`` that stays 0 where the weight vanishes."""
    weight = np.asarray(weight, dtype=float)
    rem = np.asarray(rem, dtype=float)
    out = np.zeros(np.broadcast(weight, rem).shape)
    on = np.broadcast_to(weight != 0, out.shape)
    with np.errstate(over="raise"):
        out[on] = np.broadcast_to(weight, out.shape)[on] * np.exp(-np.broadcast_to(rem, out.shape)[on])
    return out
