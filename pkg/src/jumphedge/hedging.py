"""Hedge curves read off a PIDE solution.

The marginal optimal and minimal-variance hedges are weighted averages of the
diffusion slope ``dv/ds`` and the jump slopes ``(v(e^z s) - v(s)) / ((e^z - 1) s)``,
with weights ``sigma^2`` and ``(e^z - 1)^2 w_i intensity_i``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .measure import HedgeWeights
from .model import MarketParams
from .pricing.pide import PIDESolution


@dataclass(frozen=True)
class HedgeCurve:
    s: np.ndarray
    wealth_in_asset: np.ndarray
    units_of_asset: np.ndarray
    label: str

    @classmethod
    def from_units(cls, s, units, label: str) -> "HedgeCurve":
        s = np.asarray(s, dtype=float)
        units = np.asarray(units, dtype=float)
        return cls(s=s, wealth_in_asset=units * s, units_of_asset=units, label=label)

    def at(self, s):
        """Units of the asset at arbitrary prices (linear in log price)."""
        return np.interp(np.log(s), np.log(self.s), self.units_of_asset)

    def to_csv(self, path) -> None:
        write_hedge_csv([self], path)


def write_hedge_csv(curves, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "units_of_asset", "wealth_in_asset", "label"])
        for curve in curves:
            for s, u, w in zip(curve.s, curve.units_of_asset, curve.wealth_in_asset):
                writer.writerow([repr(float(s)), repr(float(u)), repr(float(w)), curve.label])


def price_slope(solution: PIDESolution, t: float) -> np.ndarray:
    """``dv/ds`` on the grid: second-order differences in log price, one-sided at the ends."""
    row = solution.row(t)
    return np.gradient(row, solution.xi, edge_order=2) / solution.s


def delta_hedge(solution: PIDESolution, t: float = 0.0) -> HedgeCurve:
    return HedgeCurve.from_units(solution.s, price_slope(solution, t), "merton_delta")


def derivative_of_price_hedge(solution: PIDESolution, t: float = 0.0) -> HedgeCurve:
    return HedgeCurve.from_units(solution.s, price_slope(solution, t), "price_derivative")


def _weighted_slope(solution: PIDESolution, market: MarketParams, weights: np.ndarray, t: float) -> np.ndarray:
    jumps = market.jumps
    if weights.size != len(jumps):
        raise ValidationError(f"{weights.size} hedge weights for {len(jumps)} jump atoms")
    if not np.allclose(jumps.z, solution.measure.z):
        raise ValidationError("market jump sizes differ from those the solution was priced with")
    sig2 = market.sigma**2
    s = solution.s
    row = solution.row(t)
    num = sig2 * price_slope(solution, t)
    den = np.full_like(s, sig2)
    for z, jt, lam, w in zip(jumps.z, jumps.relative_sizes, jumps.intensities, weights):
        jump_slope = (solution.jump_image(t, z) - row) / (jt * s)
        num = num + jump_slope * jt**2 * w * lam
        den = den + jt**2 * w * lam
    return num / den


def marginal_optimal_hedge(
    solution: PIDESolution, market: MarketParams, weights: HedgeWeights, t: float = 0.0
) -> HedgeCurve:
    """Marginal optimal hedge; ``wealth_in_asset`` is the amount invested in the asset."""
    units = _weighted_slope(solution, market, np.asarray(weights, dtype=float), t)
    return HedgeCurve.from_units(solution.s, units, "marginal_optimal")


def minimal_variance_hedge(solution: PIDESolution, market: MarketParams, t: float = 0.0) -> HedgeCurve:
    """Minimal-variance hedge ratio, reported in units of the asset."""
    units = _weighted_slope(solution, market, np.ones(len(market.jumps)), t)
    return HedgeCurve.from_units(solution.s, units, "minimal_variance")
