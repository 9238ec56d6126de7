import json

import numpy as np
import pytest

from bolab.spectral import (
    ComplexField,
    SpectralField,
    apply_operator,
    derivative,
    field_from_dict,
    field_to_dict,
    hilbert,
    integrate,
    lp_norm,
    multiply,
    project_high,
    project_low,
    project_minus,
    project_plus,
    read_field,
    sobolev_norm_sq,
    write_field,
)
from conftest import random_field


def quad(values):
    """Trapezoid rule on the uniform grid; exact for trigonometric polynomials."""
    return 2 * np.pi * np.mean(values, axis=-1)


def test_cos_hilbert_is_sin():
    u = SpectralField([0.5])
    x = np.linspace(0, 2 * np.pi, 17, endpoint=False)
    np.testing.assert_allclose(hilbert(u)(x), np.sin(x), atol=1e-15)
    np.testing.assert_allclose(derivative(u, 2)(x), -np.cos(x), atol=1e-15)


def test_hilbert_squared_is_minus_identity(rng):
    u = random_field(rng, 12, (5,))
    np.testing.assert_allclose(hilbert(hilbert(u)).coeffs, -u.coeffs, atol=1e-15)


def test_projectors_partition_and_idempotence(rng):
    u = random_field(rng, 20, (3,))
    low, high = project_low(u, 7), project_high(u, 7)
    np.testing.assert_array_equal((low + high).coeffs, u.coeffs)
    np.testing.assert_array_equal(project_low(low, 7).coeffs, low.coeffs)
    np.testing.assert_array_equal(project_high(high, 7).coeffs, high.coeffs)
    plus, minus = project_plus(u), project_minus(u)
    np.testing.assert_allclose((plus + minus).to_real().coeffs, u.coeffs)
    assert not plus.is_hermitian()


def test_values_match_pointwise_evaluation(rng):
    u = random_field(rng, 9)
    x = 2 * np.pi * np.arange(32) / 32
    np.testing.assert_allclose(u.values(32), u(x), atol=1e-13)
    assert SpectralField.from_values(u.values(32), 9).coeffs == pytest.approx(u.coeffs)


@pytest.mark.parametrize("na,nb", [(1, 1), (3, 8), (16, 5)])
def test_fft_product_matches_direct_and_pointwise(rng, na, nb):
    f, g = random_field(rng, na, (2,)), random_field(rng, nb, (2,))
    fast, slow = multiply(f, g, method="fft"), multiply(f, g, method="direct")
    np.testing.assert_allclose(fast.coeffs, slow.coeffs, atol=1e-13)
    x = np.linspace(0, 2 * np.pi, 11)
    np.testing.assert_allclose(fast(x), f(x) * g(x), atol=1e-12)


def test_complex_products_match_direct(rng):
    u = random_field(rng, 6)
    a, b = project_plus(u), project_minus(derivative(u))
    np.testing.assert_allclose(multiply(a, b).coeffs, multiply(a, b, method="direct").coeffs, atol=1e-13)


def test_parseval_and_integral(rng):
    u = random_field(rng, 10, (4,))
    vals = u.values(64)
    np.testing.assert_allclose(sobolev_norm_sq(u, 0), quad(vals ** 2), rtol=1e-12)
    np.testing.assert_allclose(integrate(multiply(u, u)), quad(vals ** 2), rtol=1e-12)
    np.testing.assert_allclose(sobolev_norm_sq(u, 1), quad(derivative(u).values(64) ** 2), rtol=1e-12)
    assert lp_norm(u[0], 0, 2) == pytest.approx(np.sqrt(sobolev_norm_sq(u[0], 0)), rel=1e-12)


def test_products_are_not_truncated():
    u = SpectralField([0.5])
    sq = multiply(u, u)
    assert sq.n_max == 2
    assert sq.mean == pytest.approx(0.5)
    assert sq.coeffs[1] == pytest.approx(0.25)


def test_apply_operator_names():
    u = SpectralField([0.5, 0.25])
    np.testing.assert_array_equal(apply_operator(u, "project_low", 1).coeffs, [0.5])
    with pytest.raises(ValueError, match="unknown operator"):
        apply_operator(u, "laplace")
    with pytest.raises(ValueError, match="cutoff"):
        apply_operator(u, "project_high")


def test_complex_field_validation():
    with pytest.raises(ValueError):
        ComplexField(np.zeros(4))
    with pytest.raises(ValueError, match="Hermitian"):
        ComplexField([0, 0, 1j]).to_real()


def test_json_roundtrip(tmp_path, rng):
    u = random_field(rng, 5)
    path = tmp_path / "f.json"
    write_field(u, path)
    assert read_field(path).coeffs.tolist() == u.coeffs.tolist()
    data = field_to_dict(u)
    data["coeffs"] = data["coeffs"][:-1]
    with pytest.raises(ValueError, match="n_max"):
        field_from_dict(data)
    with pytest.raises(ValueError, match="malformed"):
        field_from_dict(json.loads('{"coeffs": []}'))
