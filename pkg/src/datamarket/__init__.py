"""Agent-based spatial data-market simulator with liability regimes."""

from .calibration import BuyerCoeffs, SellerCoeffs, default_buyer_coeffs, default_seller_coeffs
from .config import RunConfig, load_config
from .experiments import ExperimentPlan, plan_from_config, preset_plan, run_grid, run_one
from .regimes import RegimeConfig, RegimeKind

__version__ = "0.1.0"

__all__ = [
    "BuyerCoeffs",
    "SellerCoeffs",
    "default_buyer_coeffs",
    "default_seller_coeffs",
    "RunConfig",
    "load_config",
    "ExperimentPlan",
    "plan_from_config",
    "preset_plan",
    "run_grid",
    "run_one",
    "RegimeConfig",
    "RegimeKind",
]
