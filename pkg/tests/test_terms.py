import numpy as np
import pytest

from bolab.spectral import SpectralField, project_low
from bolab.terms import (
    Deriv,
    Hilbert,
    Product,
    evaluate_integral,
    directional_derivative,
    has_hilbert,
    leaves,
    parse,
    star_expansion,
    star_substitute,
    star_summands,
    structural_norms,
    tilde,
    truncation_defect,
)
from conftest import random_field
from oracles import grid_integral

COS = SpectralField([0.5])
NESTED = "P(D1,H(P(D2,H(D3))))"


@pytest.mark.parametrize("text,norms", [
    ("P(D0,D1,D2)", (3, 2, 3)),
    (NESTED, (3, 3, 6)),
    ("P(D0,D0,D0)", (3, 0, 0)),
])
def test_structural_norms(text, norms):
    assert structural_norms(text) == norms


def test_parse_roundtrip_and_whitespace():
    p = parse(" P( D2 , H( P( D0 , H(D1) ) ) ) ")
    assert str(p) == "P(D2,H(P(D0,H(D1))))"
    assert parse(str(p)) == p
    assert p == Product((Deriv(2), Hilbert(Product((Deriv(0), Hilbert(Deriv(1)))))))


@pytest.mark.parametrize("bad", ["P(D1)", "H(D1,D2)", "P(D1,D2", "Q1", "D-1", "P(D1,D2)x", ""])
def test_parse_rejects_malformed(bad):
    with pytest.raises(ValueError):
        parse(bad)


def test_tilde_erases_hilbert():
    t = tilde(NESTED)
    assert not has_hilbert(t)
    assert structural_norms(t) == structural_norms(NESTED)
    assert has_hilbert(NESTED)


@pytest.mark.parametrize("text,value", [
    ("P(D0,D0,D0)", 0.0),
    ("P(D0,D0,D0,D0)", 3 * np.pi / 4),
    ("P(D0,D0,H(D1))", 0.0),
])
def test_evaluate_integral_on_cos(text, value):
    assert evaluate_integral(text, COS) == pytest.approx(value, abs=1e-14)


@pytest.mark.parametrize("text", ["P(D0,D1,D2)", NESTED, "H(P(D0,D0,H(D2)))", "P(D1,D1,H(D1),D0)"])
def test_evaluate_integral_matches_grid_oracle(rng, text):
    u = random_field(rng, 7)
    assert evaluate_integral(text, u) == pytest.approx(grid_integral(text, u), rel=1e-11, abs=1e-11)


def test_cyclic_reassociation(rng):
    u = random_field(rng, 6, (3,))
    a = evaluate_integral("P(D0,D2,H(D1),D1)", u)
    b = evaluate_integral("P(D2,H(D1),D1,D0)", u)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_star_expansion_shape():
    exp = star_expansion(NESTED)
    assert [str(q) for q in exp] == [
        "P(S1,H(P(D2,H(D3))))",
        "P(D1,H(P(S2,H(D3))))",
        "P(D1,H(P(D2,H(S3))))",
    ]
    # repeated orders are substituted per leaf
    assert len(star_expansion("P(D0,D0)")) == 2


def test_directional_derivative_matches_finite_difference(rng):
    u, w = random_field(rng, 6), random_field(rng, 9)
    eps = 1e-5
    for text in ["P(D0,D0,D0)", NESTED, "P(D0,D0,H(P(D0,D1)))"]:
        fd = (evaluate_integral(text, u + w * eps) - evaluate_integral(text, u - w * eps)) / (2 * eps)
        assert directional_derivative(text, u, w) == pytest.approx(fd, rel=1e-7, abs=1e-8)
        assert directional_derivative(text, u, w) == pytest.approx(
            sum(grid_integral(q, u, w) for q in star_expansion(text)), rel=1e-11)


def test_star_substitute_examples():
    assert star_substitute("P(D0,D0)", 1, COS) == pytest.approx(0.0, abs=1e-15)
    for text in ["P(D0,D0,D0)", NESTED, "P(D0,D1,D2)"]:
        assert star_substitute(text, 2, COS) == 0.0
    assert len(star_summands(NESTED, 2, COS)) == 3


def test_star_substitute_zero_when_truncation_inactive(rng):
    u = project_low(random_field(rng, 12, (4,)), 5)
    assert np.all(truncation_defect(u, 10).coeffs == 0)
    np.testing.assert_array_equal(star_substitute(NESTED, 10, u.resized(10)), 0.0)


def test_star_substitute_linear_and_summed(rng):
    u = random_field(rng, 8)
    parts = star_summands(NESTED, 8, u)
    assert sum(parts) == pytest.approx(star_substitute(NESTED, 8, u), rel=1e-14)
    assert star_substitute("P(D0,D0,D0)", 8, u * 2.0) == pytest.approx(
        16 * star_substitute("P(D0,D0,D0)", 8, u), rel=1e-12)


def test_star_substitute_requires_field_in_TN(rng):
    u = random_field(rng, 8)
    with pytest.raises(ValueError, match="above N=4"):
        star_substitute("P(D0,D0,D0)", 4, u)


def test_leaves_order():
    assert [leaf.order for leaf in leaves(NESTED)] == [1, 2, 3]
