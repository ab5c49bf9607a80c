"""Behavioural coefficients for buyers and sellers, and price-coefficient draws.

Defaults are posterior means from the discrete-choice calibration.  The
terms whose credible intervals straddle zero (buyer tier ``gamma``, the
tier interaction ``phi``, seller tier cost ``c1`` and the risk/enforcement
interaction ``delta``) are zeroed, giving the reduced utility forms; they
stay settable so the full forms can still be run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BuyerCoeffs:
    rho: float = 0.0087  # stock decay in f(x) = exp(-rho x)
    beta: float = 0.8093  # package volume
    tau: float = 0.454  # seller tier
    gamma: float = 0.0  # buyer tier (posterior mean 0.0698)
    phi: float = 0.0  # seller x buyer tier (posterior mean -0.0282)
    mu_alpha: float = 0.6461
    sigma_alpha: float = 0.0204
    kappa: float = 1.2212  # log distance

    def __post_init__(self):
        if self.sigma_alpha < 0 or self.rho < 0:
            raise ValueError("sigma_alpha and rho must be nonnegative")


@dataclass(frozen=True)
class SellerCoeffs:
    c0: float = 4.883
    c1: float = 0.0  # seller tier (posterior mean 0.007)
    c2: float = 0.32  # package volume
    beta_r: float = 0.708
    beta_e: float = 2.976
    delta: float = 0.0  # R x E (posterior mean -0.161)
    mu_alpha: float = 0.727
    sigma_alpha: float = 0.432

    def __post_init__(self):
        if self.sigma_alpha < 0:
            raise ValueError("sigma_alpha must be nonnegative")


def default_buyer_coeffs() -> BuyerCoeffs:
    return BuyerCoeffs()


def default_seller_coeffs() -> SellerCoeffs:
    return SellerCoeffs()


def softplus(x):
    """``log(1 + e^x)`` without overflow."""
    return np.logaddexp(0.0, x)


def sample_alphas(mu: float, sigma: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` positive price coefficients ``softplus(N(mu, sigma^2))``.

    Normals come from ``Generator.standard_normal`` (numpy's ziggurat), and
    one normal is consumed per draw even when ``sigma == 0`` so that stream
    positions do not depend on the coefficient values.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    raw = mu + sigma * rng.standard_normal(size)
    return softplus(raw)


def sample_alpha(mu: float, sigma: float, rng: np.random.Generator) -> float:
    return float(sample_alphas(mu, sigma, 1, rng)[0])
