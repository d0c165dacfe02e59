"""Pricing and hedging of European claims on a jump-diffusion asset.

Four frameworks share one pricing PIDE and differ only in the adjusted jump
intensities: Merton's diversification argument, marginal utility pricing for
power and exponential utility, and minimal-variance hedging.
"""

from .errors import JumpHedgeError, ValidationError
from .invest import Amount, Fraction, implied_drift, optimal_investment
from .measure import MarginalUtility, Merton, MinimalVariance, hedge_weights, pricing_measure
from .model import Call, ClaimSpec, Custom, Exponential, JumpAtom, JumpMeasure, MarketParams, Power, Put
from .pricing import price_series_fixed_jump, solve_pide

__all__ = [
    "Amount",
    "Call",
    "ClaimSpec",
    "Custom",
    "Exponential",
    "Fraction",
    "JumpAtom",
    "JumpHedgeError",
    "JumpMeasure",
    "MarginalUtility",
    "MarketParams",
    "Merton",
    "MinimalVariance",
    "Power",
    "Put",
    "ValidationError",
    "hedge_weights",
    "implied_drift",
    "optimal_investment",
    "price_series_fixed_jump",
    "pricing_measure",
    "solve_pide",
]
