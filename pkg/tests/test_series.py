from fractions import Fraction

import numpy as np
import pytest

from bolab.series import (
    MAX_ORTHSPA_N,
    normalized,
    sum_orthspa,
    sum_orthspa_exact,
    sum_prod,
    sum_prod_exact,
)

# frozen from the rational enumeration oracles in bolab.series
PROD_GOLDEN = {1: Fraction(2), 2: Fraction(7, 4), 3: Fraction(161, 108), 4: Fraction(1117, 864),
               5: Fraction(123353, 108000)}
ORTHSPA_GOLDEN = {1: Fraction(2), 2: Fraction(85, 16), 3: Fraction(22091, 3888),
                  4: Fraction(676687, 124416), 5: Fraction(1973538707, 388800000)}


@pytest.mark.parametrize("N", sorted(PROD_GOLDEN))
def test_goldens(N):
    assert sum_prod_exact(N) == PROD_GOLDEN[N]
    assert sum_orthspa_exact(N) == ORTHSPA_GOLDEN[N]
    assert sum_prod(N) == pytest.approx(float(PROD_GOLDEN[N]), rel=1e-14)
    assert sum_orthspa(N) == pytest.approx(float(ORTHSPA_GOLDEN[N]), rel=1e-14)


def test_n4_value():
    assert sum_prod(4) == pytest.approx(1.293, abs=5e-4)


@pytest.mark.parametrize("N", [6, 9, 12])
def test_fast_sums_match_oracle(N):
    assert sum_prod(N) == pytest.approx(float(sum_prod_exact(N)), rel=1e-13)
    assert sum_orthspa(N) == pytest.approx(float(sum_orthspa_exact(N)), rel=1e-13)


@pytest.mark.parametrize("N", [3, 7, 10])
def test_prod_quadrant_symmetry(N):
    quad = sum(Fraction(1, n * n * m) for n in range(1, N + 1) for m in range(1, N + 1) if n + m > N)
    assert sum_prod_exact(N) == 2 * quad


def test_prod_strictly_decreasing():
    vals = [sum_prod(N) for N in range(8, 257)]
    assert all(v > 0 for v in vals)
    assert np.all(np.diff(vals) < 0)


def test_normalized_and_guards():
    assert np.isnan(normalized(1.0, 1))
    assert normalized(2.0, 8) == pytest.approx(16 / np.log(8))
    with pytest.raises(ValueError, match="cost guard"):
        sum_orthspa(MAX_ORTHSPA_N + 1)
    for f in (sum_prod, sum_orthspa):
        with pytest.raises(ValueError):
            f(0)
