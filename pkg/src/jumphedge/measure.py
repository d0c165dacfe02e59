"""Pricing measures and hedge weights for the four pricing frameworks.

Every framework prices with the same PIDE; they differ only in the per-atom
multipliers applied to the jump intensities.  The compensating drift always
makes the discounted asset a martingale under the adjusted measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, UnsupportedMethod, ValidationError
from .invest import Amount, Fraction, OptimalInvestment
from .model import Exponential, MarketParams, Power, UtilitySpec, jump_moment, validate_market


@dataclass(frozen=True)
class Merton:
    """Diversified jump risk: intensities are left unchanged."""


@dataclass(frozen=True)
class MarginalUtility:
    utility: UtilitySpec
    investment: OptimalInvestment

    def __post_init__(self):
        ok = (isinstance(self.utility, Power) and isinstance(self.investment, Fraction)) or (
            isinstance(self.utility, Exponential) and isinstance(self.investment, Amount)
        )
        if not ok:
            raise ValidationError(
                f"{type(self.utility).__name__} utility cannot be paired with "
                f"{type(self.investment).__name__}"
            )


@dataclass(frozen=True)
class MinimalVariance:
    pass


PricingMethod = Union[Merton, MarginalUtility, MinimalVariance]


@dataclass(frozen=True)
class PricingMeasure:
    adjusted_intensities: tuple[float, ...]
    drift_q: float
    signed: bool
    z: tuple[float, ...] = field(default=())

    @property
    def relative_sizes(self) -> np.ndarray:
        return np.expm1(np.asarray(self.z, dtype=float))

    @property
    def intensities(self) -> np.ndarray:
        return np.asarray(self.adjusted_intensities, dtype=float)


@dataclass(frozen=True)
class HedgeWeights:
    weights: tuple[float, ...]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)


def market_price_of_risk_alpha(market: MarketParams) -> float:
    """Excess average drift over total (diffusion plus jump) variance."""
    validate_market(market)
    num = market.mu + jump_moment(market.jumps, 1)
    den = market.sigma**2 + jump_moment(market.jumps, 2)
    return num / den


def _power_base(market: MarketParams, pi_tilde: float) -> np.ndarray:
    base = 1.0 + pi_tilde * market.jumps.relative_sizes
    if np.any(base <= 0.0):
        raise DomainError(f"weight base 1 + pi (e^z - 1) nonpositive for pi={pi_tilde}")
    return base


def pricing_weights(market: MarketParams, method: PricingMethod) -> np.ndarray:
    jt = market.jumps.relative_sizes
    if isinstance(method, Merton):
        return np.ones_like(jt)
    if isinstance(method, MinimalVariance):
        return 1.0 - market_price_of_risk_alpha(market) * jt
    if isinstance(method, MarginalUtility):
        inv = method.investment
        if isinstance(inv, Fraction):
            return _power_base(market, inv.pi_tilde) ** (-method.utility.beta)
        return np.exp(-inv.pi_bar * jt)
    raise UnsupportedMethod(f"unknown pricing method {method!r}")


def pricing_measure(market: MarketParams, method: PricingMethod) -> PricingMeasure:
    """Adjusted jump intensities and the drift compensating them."""
    validate_market(market)
    lam_bar = market.jumps.intensities * pricing_weights(market, method)
    drift_q = -float(np.sum(market.jumps.relative_sizes * lam_bar)) if lam_bar.size else 0.0
    signed = bool(lam_bar.size and lam_bar.min() < 0.0)
    return PricingMeasure(
        adjusted_intensities=tuple(float(v) for v in lam_bar),
        drift_q=drift_q,
        signed=signed,
        z=tuple(float(v) for v in market.jumps.z),
    )


def hedge_weights(market: MarketParams, method: PricingMethod) -> HedgeWeights:
    """Per-atom multipliers of the jump intensities inside the hedge formulas.

    The power-utility exponent is ``-beta - 1``, one lower than in the pricing
    weights.  Merton's hedge is a pure delta and has no weights.
    """
    validate_market(market)
    jt = market.jumps.relative_sizes
    if isinstance(method, Merton):
        raise UnsupportedMethod("Merton's hedge is the plain delta; it has no jump weights")
    if isinstance(method, MinimalVariance):
        w = np.ones_like(jt)
    elif isinstance(method, MarginalUtility):
        inv = method.investment
        if isinstance(inv, Fraction):
            w = _power_base(market, inv.pi_tilde) ** (-method.utility.beta - 1.0)
        else:
            w = np.exp(-inv.pi_bar * jt)
    else:
        raise UnsupportedMethod(f"unknown pricing method {method!r}")
    return HedgeWeights(tuple(float(v) for v in w))
