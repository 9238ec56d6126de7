"""Expression trees for products of derivatives of ``u`` decorated with Hilbert transforms.

Text form (prefix notation)::

    D2                 second derivative of u
    H(D1)              Hilbert transform of u_x
    P(D0,D1,H(D1))     product u * u_x * H(u_x)
    S1                 a substituted leaf: the first derivative of the
                       substitution field w (see ``directional_derivative``)

Whitespace is ignored by the parser.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .spectral import (
    SpectralField,
    derivative,
    hilbert,
    integrate,
    multiply,
    project_high,
)


@dataclass(frozen=True)
class Deriv:
    order: int
    substituted: bool = False

    def __post_init__(self):
        if not isinstance(self.order, (int, np.integer)) or self.order < 0:
            raise ValueError(f"derivative order must be a non-negative integer, got {self.order!r}")

    def __str__(self):
        return f"{'S' if self.substituted else 'D'}{self.order}"


@dataclass(frozen=True)
class Hilbert:
    child: "TermExpr"

    def __post_init__(self):
        if not isinstance(self.child, (Deriv, Hilbert, Product)):
            raise TypeError(f"Hilbert child must be a term, got {type(self.child).__name__}")

    def __str__(self):
        return f"H({self.child})"


@dataclass(frozen=True)
class Product:
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise ValueError("a product needs at least two factors")
        for f in self.factors:
            if not isinstance(f, (Deriv, Hilbert, Product)):
                raise TypeError(f"product factor must be a term, got {type(f).__name__}")

    def __str__(self):
        return "P(" + ",".join(str(f) for f in self.factors) + ")"


TermExpr = Deriv | Hilbert | Product


# parsing ------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:([DS])(\d+)|([PH])\s*\(|(,)|(\)))")


def parse(text: str) -> TermExpr:
    """Parse the prefix notation described in the module docstring."""
    pos = 0

    def token():
        nonlocal pos
        m = _TOKEN.match(text, pos)
        if not m:
            rest = text[pos:].strip()
            if not rest:
                raise ValueError(f"unexpected end of term {text!r}")
            raise ValueError(f"cannot parse term {text!r} at position {pos}: {rest[:10]!r}")
        pos = m.end()
        return m

    def node():
        m = token()
        if m.group(1):
            return Deriv(int(m.group(2)), substituted=m.group(1) == "S")
        if m.group(3) == "H":
            child = node()
            if not token().group(5):
                raise ValueError(f"H(...) takes exactly one argument in {text!r}")
            return Hilbert(child)
        if m.group(3) == "P":
            factors = [node()]
            while True:
                t = token()
                if t.group(4):
                    factors.append(node())
                elif t.group(5):
                    return Product(factors)
                else:
                    raise ValueError(f"expected ',' or ')' in {text!r}")
        raise ValueError(f"unexpected token {m.group(0).strip()!r} in {text!r}")

    expr = node()
    if text[pos:].strip():
        raise ValueError(f"trailing characters in term {text!r}: {text[pos:]!r}")
    return expr


def as_term(p) -> TermExpr:
    return parse(p) if isinstance(p, str) else p


# structure ----------------------------------------------------------------

def leaves(p: TermExpr) -> list[Deriv]:
    """Leaves in depth-first order; the index in this list is the leaf identity."""
    p = as_term(p)
    if isinstance(p, Deriv):
        return [p]
    if isinstance(p, Hilbert):
        return leaves(p.child)
    return [leaf for f in p.factors for leaf in leaves(f)]


def structural_norms(p) -> tuple[int, int, int]:
    """(homogeneity, largest derivative order, sum of derivative orders)."""
    orders = [leaf.order for leaf in leaves(as_term(p))]
    return len(orders), max(orders), sum(orders)


def tilde(p) -> TermExpr:
    """Drop every Hilbert transform, flattening nested products."""
    orders = sorted(leaf.order for leaf in leaves(as_term(p)))
    if len(orders) == 1:
        return Deriv(orders[0])
    return Product(tuple(Deriv(a) for a in orders))


def has_hilbert(p) -> bool:
    p = as_term(p)
    if isinstance(p, Hilbert):
        return True
    if isinstance(p, Product):
        return any(has_hilbert(f) for f in p.factors)
    return False


def _replace_leaf(p: TermExpr, target: int, counter: list[int]) -> TermExpr:
    if isinstance(p, Deriv):
        i = counter[0]
        counter[0] += 1
        return Deriv(p.order, substituted=True) if i == target else p
    if isinstance(p, Hilbert):
        return Hilbert(_replace_leaf(p.child, target, counter))
    return Product(tuple(_replace_leaf(f, target, counter) for f in p.factors))


def star_expansion(p) -> list[TermExpr]:
    """One tree per leaf, with that leaf marked as substituted (``S`` leaves).

    Wrappers above the substituted leaf are kept verbatim.
    """
    p = as_term(p)
    return [_replace_leaf(p, i, [0]) for i in range(len(leaves(p)))]


# evaluation ---------------------------------------------------------------

def evaluate(p, u, w=None):
    """Field obtained by plugging ``u`` (and ``w`` into ``S`` leaves) into the tree."""
    p = as_term(p)
    if isinstance(p, Deriv):
        if p.substituted:
            if w is None:
                raise ValueError("term has a substituted leaf but no substitution field was given")
            return derivative(w, p.order)
        return derivative(u, p.order)
    if isinstance(p, Hilbert):
        return hilbert(evaluate(p.child, u, w))
    return reduce(multiply, (evaluate(f, u, w) for f in p.factors))


def evaluate_integral(p, u, w=None):
    """``int_0^{2pi} p(u) dx`` computed with exact spectral products."""
    return integrate(evaluate(p, u, w))


def directional_derivative(p, u, w):
    """``sum_i int p(u)|_{leaf i -> d^{a_i} w} dx``: the derivative of ``int p`` along ``w``."""
    return sum(evaluate_integral(q, u, w) for q in star_expansion(p))


def truncation_defect(u: SpectralField, N: int) -> SpectralField:
    """``pi_{>N}(u u_x)``: the part of the nonlinearity the truncated flow discards.

    Exactly zero when the highest nonzero mode of ``u`` is at most ``N/2``.
    """
    nz = np.flatnonzero(np.any(u.coeffs != 0, axis=tuple(range(u.coeffs.ndim - 1))))
    top = int(nz[-1]) + 1 if nz.size else 0
    if 2 * top <= N:
        return SpectralField(np.zeros(u.coeffs.shape[:-1] + (2 * u.n_max,), dtype=complex))
    return project_high(multiply(u, derivative(u, 1)), N)


def _check_in_TN(u: SpectralField, N: int) -> None:
    if u.n_max > N and np.any(u.coeffs[..., N:] != 0):
        raise ValueError(f"field has nonzero modes above N={N}; project it first")
    if np.any(u.mean != 0):
        raise ValueError("field must have zero mean")


def star_substitute(p, N: int, u: SpectralField):
    """``int p*_N(u) dx`` for ``u`` in T_N."""
    _check_in_TN(u, N)
    return directional_derivative(p, u, truncation_defect(u, N))


def star_summands(p, N: int, u: SpectralField) -> list:
    """The individual ``int p*_{i,N}(u) dx`` whose sum is ``star_substitute``."""
    _check_in_TN(u, N)
    w = truncation_defect(u, N)
    return [evaluate_integral(q, u, w) for q in star_expansion(p)]
