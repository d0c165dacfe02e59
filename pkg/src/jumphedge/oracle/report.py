"""Cross-checks between the pricers and the oracles, written as a CSV report."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..invest import optimal_fraction_log_fixed_jump, optimal_fraction_power, power_residual
from ..measure import MarginalUtility, Merton, MinimalVariance, pricing_measure
from ..model import ClaimSpec, Custom, JumpMeasure, MarketParams, Power, Put
from ..pricing import price_series_fixed_jump, solve_pide
from .lattice import LatticeSpec, lattice_indifference_price
from .montecarlo import McSpec, mc_marginal_price


@dataclass(frozen=True)
class Check:
    check: str
    expected: float
    actual: float
    tolerance: float
    relative: bool = True

    @property
    def passed(self) -> bool:
        err = abs(self.actual - self.expected)
        if self.relative:
            err /= abs(self.expected)
        return bool(err <= self.tolerance)


def reference_market() -> MarketParams:
    return MarketParams.from_average_drift(0.05, 0.2, 0.0, JumpMeasure.single(-0.25, 0.25))


def _checks(include_lattice: bool, mc: McSpec) -> list[Callable[[], Check]]:
    market = reference_market()
    put = ClaimSpec(Put(100.0), 1.0)
    log_measure = pricing_measure(market, MarginalUtility(Power(1.0), optimal_fraction_power(market, 1.0)))
    z = float(market.jumps.z[0])

    def series(measure):
        return price_series_fixed_jump(measure.adjusted_intensities[0], z, market, put, 100.0)

    def log_closed_form():
        root = optimal_fraction_power(market, 1.0).pi_tilde
        return Check("log_closed_form_vs_root", root, optimal_fraction_log_fixed_jump(market).pi_tilde, 1e-10, False)

    def residual():
        pi = optimal_fraction_power(market, 1.0).pi_tilde
        return Check("optimality_residual", 0.0, power_residual(market, 1.0, pi), 1e-12, False)

    def pide_vs_series(name, method):
        def run():
            measure = pricing_measure(market, method)
            return Check(f"pide_vs_series_{name}", series(measure), solve_pide(measure, put, market).value(100.0), 1e-3)
        return run

    def martingale():
        measure = pricing_measure(market, MinimalVariance())
        claim = ClaimSpec(Custom((1.0, 2.0), (1.0, 2.0)), 1.0)
        return Check("martingale_minvar", 100.0, solve_pide(measure, claim, market).value(100.0), 1e-3)

    def monte_carlo():
        est = mc_marginal_price(market, Power(1.0), put, mc)
        return Check("mc_vs_series_log", series(log_measure), est.estimate, 3.0 * est.standard_error, False)

    def lattice():
        res = lattice_indifference_price(market, Power(1.0), put, lattice=LatticeSpec(n_steps=10))
        return Check("lattice_vs_series_log", series(log_measure), res.richardson, 0.02)

    checks = [
        log_closed_form,
        residual,
        pide_vs_series("merton", Merton()),
        pide_vs_series("log", MarginalUtility(Power(1.0), optimal_fraction_power(market, 1.0))),
        pide_vs_series("minvar", MinimalVariance()),
        martingale,
        monte_carlo,
    ]
    if include_lattice:
        checks.append(lattice)
    return checks


def run_verification(include_lattice: bool = True, mc: Optional[McSpec] = None) -> list[Check]:
    """Run every cross-check on the reference single-jump market."""
    return [c() for c in _checks(include_lattice, mc or McSpec())]


def write_report(checks, path) -> None:
    with open(path, "w", newline="") as fh:
        write_report_stream(checks, fh)


def write_report_stream(checks, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["check", "expected", "actual", "tolerance", "pass"])
    for c in checks:
        writer.writerow([c.check, repr(float(c.expected)), repr(float(c.actual)), repr(float(c.tolerance)), str(c.passed).lower()])


def all_passed(checks) -> bool:
    return all(c.passed and math.isfinite(c.actual) for c in checks) and bool(np.size(checks))
