"""Normal-quantile primitive against independent oracles."""

import math

import numpy as np
import pytest
from scipy.special import ndtri

from clipaudit.normal import norm_cdf, norm_isf, norm_ppf


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1, 0.5])
def test_isf_roundtrip_against_erf_oracle(alpha):
    # The CDF here is math.erf, an independent route from the rational
    # approximation under test.
    assert abs(norm_cdf(norm_isf(alpha)) - (1.0 - alpha)) <= 1e-9


def test_ppf_matches_scipy_on_dense_grid():
    grid = np.concatenate(
        [
            np.linspace(1e-9, 1 - 1e-9, 4001),
            10.0 ** -np.arange(2, 15),
            1 - 10.0 ** -np.arange(2, 12),
        ]
    )
    worst = max(abs(norm_ppf(p) - ndtri(p)) for p in grid)
    assert worst <= 1e-9


def test_isf_known_values():
    assert norm_isf(0.5) == 0.0
    assert norm_isf(0.05) == pytest.approx(1.6448536269514722, abs=1e-12)
    assert norm_isf(0.10) == pytest.approx(1.2815515655446004, abs=1e-12)
    assert norm_isf(0.01) == pytest.approx(2.3263478740408408, abs=1e-12)


def test_isf_symmetry_and_monotonicity():
    for alpha in (0.01, 0.1, 0.25, 0.49):
        assert norm_isf(alpha) == pytest.approx(-norm_isf(1 - alpha), abs=1e-12)
    values = [norm_isf(a) for a in (0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.99)]
    assert values == sorted(values, reverse=True)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, math.nan])
def test_ppf_rejects_out_of_domain(bad):
    with pytest.raises(ValueError):
        norm_ppf(bad)
