"""Exact arithmetic on real 2π-periodic trigonometric polynomials.

A real field ``u(x) = mean + sum_{n != 0} c_n e^{inx}`` is stored through its
positive modes only (``c_{-n} = conj(c_n)``).  Every leading axis of the
coefficient array is a batch axis, so one object can carry many samples.

Norms follow the analytic Parseval convention

    ||u||^2_{L^2} = int_0^{2pi} u^2 dx = 2pi * sum_n |c_n|^2 .
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi


def _grid_size(degree: int) -> int:
    """Smallest power of two >= 2*degree + 2 (alias-free for that degree)."""
    size = 2
    while size < 2 * degree + 2:
        size *= 2
    return size


class SpectralField:
    """Real trigonometric polynomial with Hermitian-symmetric coefficients.

    ``coeffs[..., n-1]`` holds ``c_n`` for ``n = 1..n_max``.  ``mean`` is the
    mode-0 coefficient; it is zero for the fields the library works with and
    only becomes nonzero on products.
    """

    __slots__ = ("coeffs", "mean")

    def __init__(self, coeffs, mean=0.0):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 0:
            raise ValueError("coeffs must have a mode axis")
        m = np.broadcast_to(np.asarray(mean, dtype=float), c.shape[:-1]).copy()
        c.flags.writeable = False
        m.flags.writeable = False
        self.coeffs = c
        self.mean = m

    @classmethod
    def from_modes(cls, modes: dict[int, complex], n_max: int | None = None) -> "SpectralField":
        """Build a single field from ``{n: c_n}`` with ``n >= 1``."""
        top = max(modes) if modes else 1
        n_max = top if n_max is None else n_max
        if n_max < top:
            raise ValueError(f"n_max={n_max} is below the largest mode {top}")
        c = np.zeros(n_max, dtype=complex)
        for n, value in modes.items():
            if n < 1:
                raise ValueError(f"mode {n}: only positive modes are stored")
            c[n - 1] = value
        return cls(c)

    @classmethod
    def from_values(cls, values, n_max: int) -> "SpectralField":
        """Project grid samples on ``[0, 2pi)`` onto modes ``1..n_max``."""
        values = np.asarray(values, dtype=float)
        size = values.shape[-1]
        if size < 2 * n_max + 1:
            raise ValueError("grid too coarse for the requested n_max")
        spec = np.fft.rfft(values, axis=-1) / size
        return cls(spec[..., 1:n_max + 1], mean=spec[..., 0].real)

    @property
    def n_max(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    def __len__(self):
        if not self.batch_shape:
            raise TypeError("unbatched field has no length")
        return self.batch_shape[0]

    def __getitem__(self, idx) -> "SpectralField":
        if not self.batch_shape:
            raise TypeError("unbatched field cannot be indexed")
        return SpectralField(self.coeffs[idx], self.mean[idx])

    def full(self) -> np.ndarray:
        """Two-sided coefficients for modes ``-n_max..n_max``."""
        neg = np.conj(self.coeffs[..., ::-1])
        return np.concatenate([neg, self.mean[..., None].astype(complex), self.coeffs], axis=-1)

    def to_complex(self) -> "ComplexField":
        return ComplexField(self.full())

    def resized(self, n_max: int) -> "SpectralField":
        """Zero-pad or cut the stored mode range to ``n_max``."""
        if n_max <= self.n_max:
            return SpectralField(self.coeffs[..., :n_max], self.mean)
        pad = [(0, 0)] * (self.coeffs.ndim - 1) + [(0, n_max - self.n_max)]
        return SpectralField(np.pad(self.coeffs, pad), self.mean)

    def values(self, size: int | None = None) -> np.ndarray:
        """Point values on the uniform grid ``x_j = 2pi j / size``."""
        size = _grid_size(self.n_max) if size is None else size
        if size < 2 * self.n_max + 1:
            raise ValueError("grid too coarse for this field")
        half = np.zeros(self.batch_shape + (size // 2 + 1,), dtype=complex)
        half[..., 0] = self.mean
        half[..., 1:self.n_max + 1] = self.coeffs
        return np.fft.irfft(half, n=size, axis=-1) * size

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = np.arange(1, self.n_max + 1)
        phase = np.exp(1j * np.multiply.outer(x, n))
        return self.mean[..., None] + 2.0 * np.real(
            np.einsum("...n,xn->...x", self.coeffs, phase.reshape(-1, self.n_max))
        ).reshape(self.batch_shape + x.shape)

    # arithmetic -----------------------------------------------------------

    def _aligned(self, other: "SpectralField"):
        n = max(self.n_max, other.n_max)
        return self.resized(n), other.resized(n)

    def __add__(self, other):
        if isinstance(other, ComplexField):
            return self.to_complex() + other
        if isinstance(other, SpectralField):
            a, b = self._aligned(other)
            return SpectralField(a.coeffs + b.coeffs, a.mean + b.mean)
        return NotImplemented

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return SpectralField(-self.coeffs, -self.mean)

    def __mul__(self, other):
        if isinstance(other, (SpectralField, ComplexField)):
            return multiply(self, other)
        if np.iscomplexobj(other):
            return self.to_complex() * other
        return SpectralField(self.coeffs * other, self.mean * other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __repr__(self):
        return f"SpectralField(n_max={self.n_max}, batch={self.batch_shape})"


class ComplexField:
    """Trigonometric polynomial without Hermitian symmetry.

    ``coeffs[..., n + n_max]`` holds ``c_n`` for ``n = -n_max..n_max``.  This is
    the value type of ``pi_+`` / ``pi_-`` and of anything built from them.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 0 or c.shape[-1] % 2 != 1:
            raise ValueError("two-sided coefficient axis must have odd length")
        c.flags.writeable = False
        self.coeffs = c

    @property
    def n_max(self) -> int:
        return self.coeffs.shape[-1] // 2

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    def resized(self, n_max: int) -> "ComplexField":
        d = n_max - self.n_max
        if d >= 0:
            pad = [(0, 0)] * (self.coeffs.ndim - 1) + [(d, d)]
            return ComplexField(np.pad(self.coeffs, pad))
        return ComplexField(self.coeffs[..., -d:self.coeffs.shape[-1] + d])

    def is_hermitian(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs - np.conj(self.coeffs[..., ::-1])) <= atol))

    def to_real(self, atol: float = 1e-12) -> SpectralField:
        """Convert back to a real field; fails if symmetry is broken."""
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        if not self.is_hermitian(atol * scale):
            raise ValueError("field is not Hermitian-symmetric")
        n = self.n_max
        return SpectralField(self.coeffs[..., n + 1:], self.coeffs[..., n].real)

    def __add__(self, other):
        if isinstance(other, SpectralField):
            other = other.to_complex()
        if isinstance(other, ComplexField):
            n = max(self.n_max, other.n_max)
            return ComplexField(self.resized(n).coeffs + other.resized(n).coeffs)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ComplexField(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (SpectralField, ComplexField)):
            return multiply(self, other)
        return ComplexField(self.coeffs * other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __repr__(self):
        return f"ComplexField(n_max={self.n_max}, batch={self.batch_shape})"


# Fourier multipliers ------------------------------------------------------

def _apply_symbol(f, symbol):
    """Multiply mode n by ``symbol(n)``; symbol(0) is taken from the callable too."""
    if isinstance(f, SpectralField):
        n = np.arange(1, f.n_max + 1)
        mean = f.mean * np.real(symbol(np.zeros(1)))[0]
        return SpectralField(f.coeffs * symbol(n), mean)
    n = np.arange(-f.n_max, f.n_max + 1)
    return ComplexField(f.coeffs * symbol(n))


def hilbert(f):
    """Hilbert transform: ``c_n -> -i sign(n) c_n``."""
    return _apply_symbol(f, lambda n: -1j * np.sign(n))


def derivative(f, order: int = 1):
    """``order``-th derivative: ``c_n -> (i n)^order c_n``."""
    if order < 0 or int(order) != order:
        raise ValueError(f"derivative order must be a non-negative integer, got {order}")
    if order == 0:
        return f
    return _apply_symbol(f, lambda n: (1j * n) ** order)


def abs_derivative(f, s: float):
    """Fractional ``|D|^s``: ``c_n -> |n|^s c_n`` (kills the mean for s > 0)."""
    if s == 0:
        return f
    return _apply_symbol(f, lambda n: np.where(n == 0, 0.0, np.abs(n).astype(float) ** s))


def project_low(f, N: int):
    """Dirichlet projector ``pi_N``: keep ``|n| <= N``; storage is cut to N."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if isinstance(f, SpectralField):
        return f.resized(min(f.n_max, N)) if N < f.n_max else f
    return f.resized(N) if N < f.n_max else f


def project_high(f, N: int):
    """``pi_{>N} = Id - pi_N``: keep ``|n| > N``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return _apply_symbol(f, lambda n: (np.abs(n) > N).astype(float))


def project_plus(f) -> ComplexField:
    """Keep positive frequencies only."""
    f = f.to_complex() if isinstance(f, SpectralField) else f
    return _apply_symbol(f, lambda n: (n > 0).astype(float))


def project_minus(f) -> ComplexField:
    """Keep negative frequencies only."""
    f = f.to_complex() if isinstance(f, SpectralField) else f
    return _apply_symbol(f, lambda n: (n < 0).astype(float))


_OPERATORS = {
    "hilbert": lambda f, _: hilbert(f),
    "derivative": lambda f, a: derivative(f, 1 if a is None else a),
    "project_low": lambda f, N: project_low(f, N),
    "project_high": lambda f, N: project_high(f, N),
    "project_plus": lambda f, _: project_plus(f),
    "project_minus": lambda f, _: project_minus(f),
}


def apply_operator(f, op: str, arg: int | None = None):
    """Apply a named Fourier multiplier (see ``_OPERATORS`` for the names)."""
    try:
        fn = _OPERATORS[op]
    except KeyError:
        raise ValueError(f"unknown operator {op!r}; expected one of {sorted(_OPERATORS)}") from None
    if op in ("project_low", "project_high") and arg is None:
        raise ValueError(f"{op} needs a cutoff N")
    return fn(f, arg)


# products -----------------------------------------------------------------

def _multiply_real_fft(f: SpectralField, g: SpectralField) -> SpectralField:
    deg = f.n_max + g.n_max
    size = _grid_size(deg)
    prod = f.values(size) * g.values(size)
    spec = np.fft.rfft(prod, axis=-1) / size
    return SpectralField(spec[..., 1:deg + 1], spec[..., 0].real)


def _multiply_complex_fft(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nb = a.shape[-1] // 2, b.shape[-1] // 2
    deg = na + nb
    size = _grid_size(deg)

    def synth(c, n):
        buf = np.zeros(c.shape[:-1] + (size,), dtype=complex)
        buf[..., :n + 1] = c[..., n:]
        if n:
            buf[..., size - n:] = c[..., :n]
        return np.fft.ifft(buf, axis=-1) * size

    spec = np.fft.fft(synth(a, na) * synth(b, nb), axis=-1) / size
    return np.concatenate([spec[..., size - deg:], spec[..., :deg + 1]], axis=-1)


def _convolve_direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    a = np.broadcast_to(a, shape + a.shape[-1:]).reshape(-1, a.shape[-1])
    b = np.broadcast_to(b, shape + b.shape[-1:]).reshape(-1, b.shape[-1])
    out = np.array([np.convolve(x, y) for x, y in zip(a, b)])
    return out.reshape(shape + out.shape[-1:])


DIRECT_WORK_LIMIT = 4096


def multiply(f, g, method: str = "auto"):
    """Exact product of two fields.

    The result carries degree ``f.n_max + g.n_max``; no truncation happens.
    ``method="direct"`` convolves coefficient arrays and is the reference
    the FFT path is tested against.  ``"auto"`` convolves directly when the
    work is tiny, which also keeps exact zeros free of FFT roundoff.
    """
    if method not in ("auto", "fft", "direct"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        batch = int(np.prod(np.broadcast_shapes(f.coeffs.shape[:-1], g.coeffs.shape[:-1])))
        work = batch * (2 * f.n_max + 1) * (2 * g.n_max + 1)
        method = "direct" if work <= DIRECT_WORK_LIMIT else "fft"
    if isinstance(f, SpectralField) and isinstance(g, SpectralField):
        if method == "fft":
            return _multiply_real_fft(f, g)
        full = _convolve_direct(f.full(), g.full())
        n = f.n_max + g.n_max
        return SpectralField(full[..., n + 1:], full[..., n].real)
    a = f.full() if isinstance(f, SpectralField) else f.coeffs
    b = g.full() if isinstance(g, SpectralField) else g.coeffs
    if method == "fft":
        return ComplexField(_multiply_complex_fft(a, b))
    return ComplexField(_convolve_direct(a, b))


def integrate(f):
    """``int_0^{2pi} f dx``; real for real fields, complex otherwise."""
    if isinstance(f, SpectralField):
        return TWO_PI * f.mean
    return TWO_PI * f.coeffs[..., f.n_max]


# norms --------------------------------------------------------------------

def sobolev_norm_sq(f, s: float, homogeneous: bool = True):
    """``2pi * sum_n w_n |c_n|^2`` with ``w_n = |n|^{2s}`` or ``(1+n^2)^s``."""
    if isinstance(f, SpectralField):
        n = np.arange(1, f.n_max + 1, dtype=float)
        w = n ** (2 * s) if homogeneous else (1 + n * n) ** s
        total = 2.0 * np.sum(w * np.abs(f.coeffs) ** 2, axis=-1)
        if not homogeneous:
            total = total + f.mean ** 2
        return TWO_PI * total
    n = np.arange(-f.n_max, f.n_max + 1, dtype=float)
    if homogeneous:
        w = np.where(n == 0, 0.0, np.abs(n) ** (2 * s))
    else:
        w = (1 + n * n) ** s
    return TWO_PI * np.sum(w * np.abs(f.coeffs) ** 2, axis=-1)


def lp_norm(f: SpectralField, s: float = 0.0, p: float = 2.0, oversample: int = 8):
    """Grid approximation of the ``W^{s,p}`` norm with Bessel multiplier ``(1+n^2)^{s/2}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    n = np.arange(1, f.n_max + 1, dtype=float)
    g = SpectralField(f.coeffs * (1 + n * n) ** (s / 2), f.mean)
    size = 2
    while size < oversample * (2 * f.n_max + 1):
        size *= 2
    vals = np.abs(g.values(size))
    return (TWO_PI / size * np.sum(vals ** p, axis=-1)) ** (1.0 / p)


# file format ----------------------------------------------------------------

def field_to_dict(f: SpectralField) -> dict:
    if f.batch_shape:
        raise ValueError("only single fields can be serialized")
    return {"n_max": f.n_max, "coeffs": [[float(c.real), float(c.imag)] for c in f.coeffs]}


def field_from_dict(data: dict) -> SpectralField:
    try:
        n_max = int(data["n_max"])
        raw = data["coeffs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed field object: {exc}") from None
    if n_max < 1:
        raise ValueError("n_max must be positive")
    if len(raw) != n_max:
        raise ValueError(f"coeffs has {len(raw)} entries, n_max says {n_max}")
    coeffs = []
    for i, pair in enumerate(raw, start=1):
        if len(pair) != 2:
            raise ValueError(f"coefficient {i} must be [re, im]")
        coeffs.append(complex(float(pair[0]), float(pair[1])))
    return SpectralField(coeffs)


def read_field(path) -> SpectralField:
    return field_from_dict(json.loads(Path(path).read_text()))


def write_field(f: SpectralField, path) -> None:
    Path(path).write_text(json.dumps(field_to_dict(f), indent=1) + "\n")
