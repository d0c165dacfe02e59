"""Closed-form prices: Black-Scholes with dividend yield, the Poisson-mixture
series for a single jump size, and implied volatility inversion."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr
from scipy.stats import poisson

from ..errors import NegativeIntensity, OutOfBounds, ValidationError
from ..model import Call, ClaimSpec, MarketParams, Put

SERIES_TAIL = 1e-12
SERIES_MAX_TERMS = 200
VOL_LO, VOL_HI = 1e-4, 5.0


def _kind_name(kind) -> str:
    if isinstance(kind, Put):
        return "put"
    if isinstance(kind, Call):
        return "call"
    kind = str(kind).lower()
    if kind not in ("put", "call"):
        raise ValidationError(f"vanilla kind must be 'put' or 'call', got {kind!r}")
    return kind


def black_scholes(s, strike, r, q, sigma, tau, kind="put"):
    """European put/call value with continuous dividend yield ``q``.

    Vectorized over ``s``; ``tau = 0`` returns the payoff.
    """
    kind = _kind_name(kind)
    s = np.asarray(s, dtype=float)
    if tau <= 0.0:
        out = np.maximum(strike - s, 0.0) if kind == "put" else np.maximum(s - strike, 0.0)
        return out if out.ndim else float(out)
    vol = sigma * math.sqrt(tau)
    with np.errstate(divide="ignore"):
        d1 = (np.log(s / strike) + (r - q + 0.5 * sigma**2) * tau) / vol
    d2 = d1 - vol
    disc_k = strike * math.exp(-r * tau)
    fwd_s = s * math.exp(-q * tau)
    if kind == "put":
        out = disc_k * ndtr(-d2) - fwd_s * ndtr(-d1)
    else:
        out = fwd_s * ndtr(d1) - disc_k * ndtr(d2)
    return out if out.ndim else float(out)


def poisson_weights(mean: float, tail: float = SERIES_TAIL, max_terms: int = SERIES_MAX_TERMS) -> np.ndarray:
    """Poisson probabilities up to the first k with remaining mass below ``tail``."""
    n = int(poisson.isf(tail, mean)) + 1 if mean > 0 else 1
    return poisson.pmf(np.arange(min(n, max_terms)), mean)


def price_series_fixed_jump(lambda_bar: float, J: float, market: MarketParams, claim: ClaimSpec, s, t: float = 0.0):
    """Value of a vanilla claim when every jump has log size ``J`` and rate ``lambda_bar``.

    Mixture of Black-Scholes prices over the number of jumps, each with the
    dividend yield ``lambda_bar (e^J - 1)`` that compensates the jump drift.
    """
    if not claim.is_vanilla:
        raise ValidationError("the series pricer handles puts and calls only")
    if lambda_bar < 0.0:
        raise NegativeIntensity(f"lambda_bar={lambda_bar} < 0; signed measures need the PIDE")
    tau = claim.maturity - t
    s = np.asarray(s, dtype=float)
    kind = _kind_name(claim.kind)
    if tau <= 0.0:
        return black_scholes(s, claim.strike, market.rate, 0.0, market.sigma, 0.0, kind)
    q = lambda_bar * math.expm1(J)
    weights = poisson_weights(lambda_bar * tau)
    total = np.zeros_like(s)
    for k, w in enumerate(weights):
        total = total + w * black_scholes(s * math.exp(k * J), claim.strike, market.rate, q, market.sigma, tau, kind)
    return total if total.ndim else float(total)


def price_bounds(s: float, strike: float, r: float, tau: float, kind="put") -> tuple[float, float]:
    disc_k = strike * math.exp(-r * tau)
    if _kind_name(kind) == "put":
        return max(disc_k - s, 0.0), disc_k
    return max(s - disc_k, 0.0), s


def implied_vol(price: float, s: float, strike: float, r: float, tau: float, kind="put") -> float:
    """Black-Scholes volatility in ``[1e-4, 5]`` reproducing ``price``."""
    lo, hi = price_bounds(s, strike, r, tau, kind)
    if not (lo <= price <= hi) or tau <= 0.0:
        raise OutOfBounds(f"price {price} outside no-arbitrage bounds [{lo}, {hi}]")

    def f(vol):
        return black_scholes(s, strike, r, 0.0, vol, tau, kind) - price

    f_lo, f_hi = f(VOL_LO), f(VOL_HI)
    if abs(f_lo) < 1e-10 * s:
        return VOL_LO
    if abs(f_hi) < 1e-10 * s:
        return VOL_HI
    if f_lo > 0.0 or f_hi < 0.0:
        raise OutOfBounds(f"price {price} not attainable with volatility in [{VOL_LO}, {VOL_HI}]")
    return float(brentq(f, VOL_LO, VOL_HI, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
