"""Truncated Benjamin-Ono flow.

Modes ``1..N`` follow ``dc_n/dt = -i n^2 c_n - [pi_N(v v_x)]_n`` with
``v = pi_N u``; modes above ``N`` rotate freely, ``c_n(t) = c_n(0) e^{-i n^2 t}``.
The low block is integrated by integrating-factor RK4, so the dispersive
part is exact and the step is limited by the nonlinearity only.  By default
each step is followed by a rescaling of the low block onto its initial
``L^2`` sphere; the flow conserves that norm, and the projection keeps the
method fourth order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energies import EnergySpec, builtin_energy, energy_value
from .spectral import SpectralField, _grid_size, field_to_dict, project_low, sobolev_norm_sq


@dataclass(frozen=True)
class FlowConfig:
    N: int
    t_end: float
    dt: float | None = None
    record_every: int = 1
    project_l2: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.dt is None:
            object.__setattr__(self, "dt", min(1e-2, 0.1 / self.N))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def steps(self) -> int:
        """Number of steps; ``dt`` is shrunk slightly so they land on ``t_end``."""
        return max(1, math.ceil(self.t_end / self.dt - 1e-9)) if self.t_end > 0 else 0

    @property
    def step(self) -> float:
        return self.t_end / self.steps if self.steps else self.dt


class FlowBlowUp(FloatingPointError):
    """Non-finite state; ``snapshot`` is the last finite field, reached at ``time``."""

    def __init__(self, time: float, snapshot: SpectralField):
        super().__init__(f"non-finite state after t={time:.6g}")
        self.time = time
        self.snapshot = snapshot


@dataclass
class Trajectory:
    times: np.ndarray
    coeffs: np.ndarray  # (snapshot, ..., mode)
    N: int
    _diag: dict = field(default_factory=dict, repr=False)

    @property
    def fields(self) -> list[SpectralField]:
        return [SpectralField(c) for c in self.coeffs]

    def stacked(self) -> SpectralField:
        """All snapshots as one field with the time index as leading batch axis."""
        return SpectralField(self.coeffs)

    @property
    def final(self) -> SpectralField:
        return SpectralField(self.coeffs[-1])

    def diagnostics(self, ks=range(5)) -> dict:
        """Mean, L^2 norm and ``E_{k/2}(pi_N u(t))`` per snapshot."""
        key = tuple(ks)
        if key not in self._diag:
            u = self.stacked()
            low = project_low(u, self.N)
            out = {"mean": np.broadcast_to(u.mean, u.batch_shape).copy(), "l2": np.sqrt(sobolev_norm_sq(u, 0))}
            for k in key:
                out[f"E{k}"] = energy_value(builtin_energy(k), low)
            self._diag[key] = out
        return self._diag[key]

    def write_csv(self, path, ks=range(5)) -> None:
        """``time`` plus diagnostics; batched trajectories are not supported here."""
        if self.coeffs.ndim != 2:
            raise ValueError("CSV export needs an unbatched trajectory")
        diag = self.diagnostics(ks)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", *diag])
            for i, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(diag[k][i])) for k in diag])

    def write_snapshots(self, path) -> None:
        data = {"N": self.N, "times": [float(t) for t in self.times],
                "fields": [field_to_dict(f) for f in self.fields]}
        Path(path).write_text(json.dumps(data) + "\n")


def _nonlinear(c: np.ndarray, N: int, size: int) -> np.ndarray:
    """``-[pi_N(v v_x)]_n = -(i n / 2) [v^2]_n`` for ``n = 1..N``."""
    half = np.zeros(c.shape[:-1] + (size // 2 + 1,), dtype=complex)
    half[..., 1:N + 1] = c
    v = np.fft.irfft(half, n=size, axis=-1) * size
    sq = np.fft.rfft(v * v, axis=-1)[..., 1:N + 1] / size
    return -0.5j * np.arange(1, N + 1) * sq


def evolve(u0: SpectralField, cfg: FlowConfig, backward: bool = False) -> Trajectory:
    """Integrate to ``t_end`` (or to ``-t_end`` with ``backward=True``).

    Batched initial data are integrated together.  A non-finite state raises
    ``FlowBlowUp`` carrying the last finite snapshot.
    """
    if np.any(u0.mean != 0):
        raise ValueError("initial datum must have zero mean")
    N = cfg.N
    n_store = max(u0.n_max, N)
    c0 = u0.resized(n_store).coeffs.copy()
    size = _grid_size(2 * N)
    h = -cfg.step if backward else cfg.step
    omega = np.arange(1, N + 1, dtype=float) ** 2
    e_half = np.exp(-1j * omega * h / 2)
    e_full = e_half * e_half
    n_high = np.arange(N + 1, n_store + 1, dtype=float) ** 2

    c = c0[..., :N].copy()
    target = np.sum(np.abs(c) ** 2, axis=-1, keepdims=True)
    times, snaps = [0.0], [c0.copy()]
    for step in range(1, cfg.steps + 1):
        k1 = _nonlinear(c, N, size)
        k2 = _nonlinear(e_half * (c + 0.5 * h * k1), N, size)
        k3 = _nonlinear(e_half * c + 0.5 * h * k2, N, size)
        k4 = _nonlinear(e_full * c + h * e_half * k3, N, size)
        new = e_full * c + (h / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
        if not np.all(np.isfinite(new)):
            raise FlowBlowUp(times[-1], SpectralField(snaps[-1]))
        if cfg.project_l2:
            norm = np.sum(np.abs(new) ** 2, axis=-1, keepdims=True)
            new = new * np.sqrt(np.divide(target, norm, out=np.ones_like(norm), where=norm > 0))
        c = new
        if step % cfg.record_every == 0 or step == cfg.steps:
            t = step * h
            full = np.empty_like(c0)
            full[..., :N] = c
            full[..., N:] = c0[..., N:] * np.exp(-1j * n_high * t)
            times.append(t)
            snaps.append(full)
    return Trajectory(np.array(times), np.array(snaps), N)


@dataclass
class DriftSeries:
    times: np.ndarray
    energy: np.ndarray
    rate: np.ndarray  # defined on interior snapshots ``index``
    index: np.ndarray


def energy_drift(traj: Trajectory, spec: EnergySpec, order: int = 2) -> DriftSeries:
    """``E(pi_N u(t_i))`` and its centered finite-difference time derivative.

    ``order=2`` is the three-point stencil; ``order=4`` the five-point one,
    whose error shrinks like ``dt^4`` and so tracks the RK4 error.
    """
    if len(traj.times) < 3:
        raise ValueError("need at least 3 snapshots")
    dts = np.diff(traj.times)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=0):
        raise ValueError("snapshots must be equally spaced")
    d = dts[0]
    E = energy_value(spec, project_low(traj.stacked(), traj.N))
    if order == 2:
        rate = (E[2:] - E[:-2]) / (2 * d)
        index = np.arange(1, len(E) - 1)
    elif order == 4:
        if len(E) < 5:
            raise ValueError("the five-point stencil needs at least 5 snapshots")
        rate = (-E[4:] + 8 * E[3:-1] - 8 * E[1:-3] + E[:-4]) / (12 * d)
        index = np.arange(2, len(E) - 2)
    else:
        raise ValueError("order must be 2 or 4")
    return DriftSeries(traj.times, E, rate, index)
