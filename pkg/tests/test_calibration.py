import math
from dataclasses import asdict

import numpy as np
import pytest
from scipy import integrate, stats

from datamarket.calibration import (
    BuyerCoeffs,
    SellerCoeffs,
    default_buyer_coeffs,
    default_seller_coeffs,
    sample_alpha,
    sample_alphas,
    softplus,
)

TABLE1 = dict(rho=0.0087, beta=0.8093, tau=0.454, gamma=0.0, phi=0.0,
              mu_alpha=0.6461, sigma_alpha=0.0204, kappa=1.2212)
TABLE2 = dict(c0=4.883, c1=0.0, c2=0.32, beta_r=0.708, beta_e=2.976, delta=0.0,
              mu_alpha=0.727, sigma_alpha=0.432)


def test_buyer_defaults_match_table_means_field_for_field():
    assert asdict(default_buyer_coeffs()) == TABLE1


def test_seller_defaults_match_table_means_field_for_field():
    assert asdict(default_seller_coeffs()) == TABLE2


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        BuyerCoeffs(sigma_alpha=-0.1)
    with pytest.raises(ValueError):
        SellerCoeffs(sigma_alpha=-0.1)
    with pytest.raises(ValueError):
        sample_alpha(0.0, -1.0, np.random.default_rng(0))


@pytest.mark.parametrize(
    "mu, expected", [(0.0, math.log(2.0)), (0.6461, 1.0675), (0.727, 1.1213)]
)
def test_sample_alpha_degenerate_is_softplus(mu, expected):
    rng = np.random.default_rng(0)
    assert sample_alpha(mu, 0.0, rng) == pytest.approx(expected, abs=5e-5)
    assert sample_alpha(mu, 0.0, rng) == math.log1p(math.exp(mu))


def test_softplus_no_overflow():
    assert softplus(1000.0) == 1000.0
    assert softplus(-1000.0) >= 0.0


def test_alphas_strictly_positive():
    a = sample_alphas(0.727, 0.432, 100_000, np.random.default_rng(1))
    assert (a > 0).all()


def test_one_normal_consumed_per_draw_even_with_zero_sigma():
    r1, r2 = np.random.default_rng(5), np.random.default_rng(5)
    sample_alphas(0.5, 0.0, 10, r1)
    sample_alphas(0.5, 1.0, 10, r2)
    assert r1.random() == r2.random()


@pytest.mark.parametrize("coeffs", [BuyerCoeffs(), SellerCoeffs()], ids=["buyer", "seller"])
def test_mean_alpha_matches_quadrature_oracle(coeffs):
    mu, sigma = coeffs.mu_alpha, coeffs.sigma_alpha
    # independent oracle: E[softplus(N(mu, sigma^2))] by numerical integration
    oracle, _ = integrate.quad(
        lambda x: math.log1p(math.exp(x)) * stats.norm.pdf(x, mu, sigma), mu - 12 * sigma, mu + 12 * sigma
    )
    draws = sample_alphas(mu, sigma, 200_000, np.random.default_rng(2))
    assert draws.mean() == pytest.approx(oracle, rel=0.02)
