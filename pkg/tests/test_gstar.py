import csv

import numpy as np
import pytest

from bolab.energies import EnergySpec, builtin_energy
from bolab.flow import FlowConfig, energy_drift, evolve
from bolab.gaussian import GaussianEnsemble, sample_batch
from bolab.gstar import (
    DecayRow,
    DriftSpec,
    brute_force_constrained_sum,
    constrained_sum,
    g_value,
    majorant,
    make_family,
    multi,
    p3,
    p3sing,
    pstar_decay_experiment,
    pstar_statistic,
    quadratic_star,
    quartic,
    write_rows,
)
from bolab.spectral import SpectralField, project_low
from conftest import random_field

COS = SpectralField([0.5])


@pytest.mark.parametrize("k", range(5))
def test_g_vanishes_when_truncation_inactive(k):
    assert g_value(DriftSpec(builtin_energy(k), 2), COS) == 0.0


def test_g_of_l2_is_zero(rng):
    u = random_field(rng, 12, (3,))
    np.testing.assert_array_equal(g_value(DriftSpec(builtin_energy(0), 6), u), 0.0)


@pytest.mark.parametrize("s", [0, 0.5, 1, 2])
def test_quadratic_star_is_zero(rng, s):
    u = random_field(rng, 10, (3,))
    np.testing.assert_array_equal(quadratic_star(u, s, 6), 0.0)


def test_g_matches_finite_difference():
    u0 = sample_batch(GaussianEnsemble(2, 8, seed=11), range(4))
    dt = 5e-5
    traj = evolve(u0, FlowConfig(8, 20 * dt, dt=dt))
    drift = energy_drift(traj, builtin_energy(2))
    g = g_value(DriftSpec(builtin_energy(2), 8), SpectralField(traj.coeffs[drift.index]))
    assert np.max(np.abs(g - drift.rate)) <= max(1e-6, 10 * dt ** 2)
    assert np.max(np.abs(g)) > 1e-5


def test_drift_spec_validation():
    with pytest.raises(ValueError):
        DriftSpec(EnergySpec(0.0), 0)


@pytest.mark.parametrize("exponents,pair", [
    ((3, 2, 1, 0), (0, 1)),
    ((3, 1, 2, 1), (0, 1)),
    ((3, 3, 1, 3, 0), (3, 4)),
    ((1, 1), (0, 1)),
])
@pytest.mark.parametrize("N", [1, 3, 5])
def test_constrained_sum_matches_brute_force(exponents, pair, N):
    assert constrained_sum(exponents, pair, N) == pytest.approx(brute_force_constrained_sum(exponents, pair, N), rel=1e-12, abs=1e-15)


def test_constrained_sum_guard():
    with pytest.raises(ValueError, match="cost guard"):
        constrained_sum((1, 1, 1), (0, 1), 513)


@pytest.mark.parametrize("call,msg", [
    (lambda: p3sing(1), "m >= 2"),
    (lambda: p3(1, 1, 2), "odd"),
    (lambda: p3(0, 0, 3), "max order <= m=1|m >= 2"),
    (lambda: p3(0, 1, 4), "max order <= m=2"),
    (lambda: quartic((0, 0, 1, 2)), "even order sum"),
    (lambda: quartic((0, 0, 0, 4)), "every order <= m=2"),
    (lambda: quartic((0, 0, 2)), "4 orders"),
    (lambda: multi((0, 0, 0, 1, 3), 2), "order sum <= 2m-1=3"),
    (lambda: multi((0, 0, 1, 1), 2), "at least 5"),
    (lambda: make_family("p3", 3, (1, 2, 2)), "fix m=2"),
    (lambda: make_family("sextic", 2, (0,)), "unknown family"),
    (lambda: p3sing(2, term="P(D0,D2,D2)"), "derivative orders"),
])
def test_family_constraints_named(call, msg):
    with pytest.raises(ValueError, match=msg):
        call()


def test_family_terms_and_labels():
    fam = p3sing(2)
    assert str(fam.term) == "P(D0,H(D2),D3)"
    assert fam.label == "p3sing(0,2,3)"
    assert make_family("quartic", None, (2, 0, 2, 0)).alphas == (0, 0, 2, 2)
    custom = p3(2, 1, 2, term="H(P(D1,D2,H(D2)))")
    assert str(custom.term) == "H(P(D1,D2,H(D2)))"


@pytest.mark.parametrize("fam", [p3sing(2), p3(1, 2, 2), p3(2, 2, 3), quartic((0, 0, 2, 2)), multi((0, 0, 0, 1, 2), 2)])
def test_majorant_decays_like_log_squared_over_n(fam):
    grid = [8, 16, 32, 64, 128, 256]
    vals = np.array([majorant(fam, N) for N in grid])
    norm = vals * np.array(grid) / np.log(grid) ** 2
    assert np.all(np.diff(vals) < 0)
    assert np.all(norm <= norm[0] * (1 + 1e-12))


def test_pstar_zero_on_half_projection():
    fam = p3sing(2)
    u = sample_batch(GaussianEnsemble(3, 32, seed=1), range(5))
    half = project_low(u, 8)
    np.testing.assert_array_equal(pstar_statistic(fam, 16)(half), 0.0)


def test_decay_experiment_rows(tmp_path):
    rows = pstar_decay_experiment(p3sing(2), [8, 16], samples=64, seed=3)
    assert [r.N for r in rows] == [8, 16]
    assert all(r.samples == 64 and r.seed == 3 and r.stderr > 0 for r in rows)
    again = pstar_decay_experiment(p3sing(2), [8, 16], samples=64, seed=3)
    assert [r.estimate for r in rows] == [r.estimate for r in again]
    write_rows(rows, tmp_path / "d.csv")
    table = list(csv.reader(open(tmp_path / "d.csv")))
    assert tuple(table[0]) == DecayRow.FIELDS
    with pytest.raises(ValueError):
        pstar_decay_experiment(p3sing(2), [8], q=0.5)
