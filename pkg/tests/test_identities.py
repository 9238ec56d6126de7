import json

import numpy as np
import pytest

import bolab.identities as ids
from bolab.identities import (
    EXPLICIT_IDS,
    FAMILIES,
    basis_functionals,
    basis_indices,
    extension_indices,
    fit_identity_coefficients,
    random_TN,
    verification_report,
    verify_explicit_identity,
    write_report,
)
from bolab.spectral import SpectralField, multiply

COS = SpectralField([0.5, 0.0])
COS12 = SpectralField([0.5, 0.5])


@pytest.mark.parametrize("name", EXPLICIT_IDS)
def test_trivial_case_vanishes(name):
    assert verify_explicit_identity(name, COS, 2, 2) == 0.0


def test_intpar3_by_direct_convolution(monkeypatch):
    fast = verify_explicit_identity("intpar3", COS12, 2, 2)
    monkeypatch.setattr(ids, "multiply", lambda f, g: multiply(f, g, method="direct"))
    slow = verify_explicit_identity("intpar3", COS12, 2, 2)
    assert fast <= 1e-12 and slow <= 1e-12
    lhs = ids.explicit_lhs("intpar3", COS12, 2, 2)
    assert abs(lhs) > 1e-3


@pytest.mark.parametrize("name", EXPLICIT_IDS)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_explicit_identities_random(name, m):
    u = random_TN(np.random.default_rng(m), 16, 30)
    assert np.max(verify_explicit_identity(name, u, 16, m)) <= 1e-10


@pytest.mark.parametrize("name", ["comes", "intpar23"])
def test_all_plus_sign_pattern_fails(name):
    u = random_TN(np.random.default_rng(0), 8, 10)
    assert np.max(verify_explicit_identity(name, u, 8, 2, printed=True)) > 1e-2


def test_explicit_identity_input_checks():
    with pytest.raises(ValueError, match="above N=1"):
        verify_explicit_identity("intpar3", COS12, 1, 1)
    with pytest.raises(ValueError, match="m must be"):
        verify_explicit_identity("intpar3", COS12, 2, 0)
    with pytest.raises(ValueError, match="unknown identity"):
        verify_explicit_identity("intpar9", COS12, 2, 1)


def test_mire1_fit():
    fit = fit_identity_coefficients("mire1", 1, 8)
    assert fit.residual <= 1e-8 and fit.stability <= 1e-6
    np.testing.assert_allclose(fit.coefficients, [-1j], atol=1e-10)


def test_intpar22_printed_basis_misses_at_m3():
    printed = fit_identity_coefficients("intpar22", 3, 16)
    assert printed.residual > 1e-3
    extended = fit_identity_coefficients("intpar22", 3, 16, basis="extended")
    assert extended.residual <= 1e-8 and extended.stability <= 1e-6
    assert extended.labels == ["B1", "B2", "C2"]


@pytest.mark.parametrize("name", FAMILIES)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_extended_basis_spans_every_family(name, m):
    fit = fit_identity_coefficients(name, m, 16, basis="extended")
    assert fit.residual <= 1e-8 and fit.stability <= 1e-6


def test_trivial_fit_on_low_modes():
    fit = fit_identity_coefficients("mire1", 1, 2, modes=1)
    assert fit.trivial and fit.residual == 0.0


def test_basis_definitions():
    assert basis_indices(1) == [1]
    assert basis_indices(3) == [1, 2]
    assert basis_indices(4) == [1, 2]
    assert extension_indices(3) == [2]
    assert extension_indices(2) == []
    u = random_TN(np.random.default_rng(1), 8, 2)
    assert len(basis_functionals(u, 8, 3, "extended")) == 3
    with pytest.raises(ValueError, match="unknown basis"):
        basis_functionals(u, 8, 3, "other")


def test_fit_input_checks():
    with pytest.raises(ValueError, match="unknown family"):
        fit_identity_coefficients("mire3", 1, 8)
    with pytest.raises(ValueError, match="samples"):
        fit_identity_coefficients("mire1", 3, 8, samples=3)


def test_report(tmp_path):
    rows = verification_report([4], [1], samples=5)
    assert len(rows) == len(EXPLICIT_IDS) + len(FAMILIES)
    assert {"identity", "m", "N", "residual"} <= set(rows[0])
    assert "coefficients" in rows[-1]
    write_report(rows, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == json.loads(json.dumps(rows))
