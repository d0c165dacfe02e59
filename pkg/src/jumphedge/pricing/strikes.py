"""Vanilla prices across a strike axis from a single PIDE solve.

Put and call values are homogeneous of degree one in (price, strike), so
``P(S, K) = (K / S) P(S^2 / K, S)``: one solve with strike ``S`` covers every
strike once the grid spans ``S^2 / K``.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..errors import OutOfBounds, ValidationError
from ..measure import PricingMeasure
from ..model import Call, ClaimSpec, MarketParams, Put
from .analytic import implied_vol
from .pide import GridSpec, PIDESolution, solve_pide


def reference_solution(
    measure: PricingMeasure,
    market: MarketParams,
    kind: str,
    strikes,
    spot: float,
    maturity: float,
    grid_overrides: Optional[dict] = None,
) -> PIDESolution:
    strikes = np.asarray(strikes, dtype=float)
    if strikes.size == 0 or np.any(strikes <= 0) or spot <= 0:
        raise ValidationError("strikes and spot must be positive")
    claim = ClaimSpec(Put(spot) if kind == "put" else Call(spot), maturity)
    grid = GridSpec.default(claim, market.jumps.z)
    need_lo = spot**2 / strikes.max()
    need_hi = spot**2 / strikes.min()
    params = dict(s_min=min(grid.s_min, need_lo / 4.0), s_max=max(grid.s_max, need_hi * 4.0))
    params.update(grid_overrides or {})
    grid = GridSpec.default(claim, market.jumps.z, **params)
    return solve_pide(measure, claim, market, grid)


def prices_across_strikes(
    measure: PricingMeasure,
    market: MarketParams,
    kind: str,
    strikes,
    spot: float,
    maturity: float,
    grid_overrides: Optional[dict] = None,
) -> np.ndarray:
    """Time-0 values at ``spot`` of puts or calls struck at each of ``strikes``."""
    if kind not in ("put", "call"):
        raise ValidationError(f"kind must be 'put' or 'call', got {kind!r}")
    strikes = np.asarray(strikes, dtype=float)
    sol = reference_solution(measure, market, kind, strikes, spot, maturity, grid_overrides)
    return strikes / spot * np.asarray(sol.value(spot**2 / strikes), dtype=float)


def implied_vols(prices, spot: float, strikes, rate: float, maturity: float, kind: str) -> np.ndarray:
    """Implied volatilities, NaN where a price has none (e.g. negative prices)."""
    out = []
    for p, k in zip(np.asarray(prices, dtype=float), np.asarray(strikes, dtype=float)):
        try:
            out.append(implied_vol(float(p), spot, float(k), rate, maturity, kind))
        except OutOfBounds:
            out.append(math.nan)
    return np.asarray(out)
