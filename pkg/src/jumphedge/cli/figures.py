"""Data behind the six published figures, one CSV per figure.

All figures use the single-jump market ``sigma = 0.2``, ``r = 0``, one jump
of relative size ``-0.25`` at rate ``0.25``, and ``T = 1``.  Smile figures
(fig1-fig4) price puts at spot 100 over strikes 50, 55, ..., 200; hedge
figures (fig5, fig6) tabulate units of the asset for a put with strike 100
over ``s = 50, 51, ..., 200``.
"""

from __future__ import annotations

import csv
import math
from typing import Callable

import numpy as np

from ..errors import UnknownFigure
from ..hedging import delta_hedge, derivative_of_price_hedge, marginal_optimal_hedge, minimal_variance_hedge
from ..invest import Fraction, implied_drift, optimal_amount_exponential, optimal_fraction_power
from ..measure import MarginalUtility, Merton, MinimalVariance, hedge_weights, pricing_measure
from ..model import ClaimSpec, Exponential, JumpMeasure, MarketParams, Power, Put
from ..pricing import solve_pide
from ..pricing.strikes import implied_vols, prices_across_strikes

SPOT = 100.0
MATURITY = 1.0
STRIKES = np.arange(50.0, 200.0 + 1e-9, 5.0)
HEDGE_S = np.arange(50.0, 200.0 + 1e-9, 1.0)
FIG3_BETAS = (2.0, 5.0, 10.0, 100.0, 1000.0)
FIG4_BETAS = (1.0, 2.0, 5.0, 10.0)
FIG4_PI = 0.5


def figure_market(mu_tilde: float = 0.05) -> MarketParams:
    return MarketParams.from_average_drift(mu_tilde, 0.2, 0.0, JumpMeasure.single(-0.25, 0.25))


def _moneyness():
    k_over_s = STRIKES / SPOT
    return {"moneyness": k_over_s, "moneyness_k_over_s": k_over_s, "moneyness_s_over_k": SPOT / STRIKES, "strike": STRIKES}


def _smile(market: MarketParams, method):
    prices = prices_across_strikes(pricing_measure(market, method), market, "put", STRIKES, SPOT, MATURITY)
    return prices, implied_vols(prices, SPOT, STRIKES, market.rate, MATURITY, "put")


def _reference_vol(market: MarketParams) -> float:
    return math.sqrt(market.sigma**2 + float(np.sum(market.jumps.z**2 * market.jumps.intensities)))


def _price_figure(mu_tilde: float):
    market = figure_market(mu_tilde)
    log_util = MarginalUtility(Power(1.0), optimal_fraction_power(market, 1.0))
    pm, ivm = _smile(market, Merton())
    pu, ivu = _smile(market, log_util)
    pv, ivv = _smile(market, MinimalVariance())
    mon = _moneyness()
    cols = {
        "moneyness": mon["moneyness"],
        "iv_merton": ivm,
        "iv_utility_log": ivu,
        "iv_minvar": ivv,
        "iv_reference": np.full(STRIKES.shape, _reference_vol(market)),
        "moneyness_k_over_s": mon["moneyness_k_over_s"],
        "moneyness_s_over_k": mon["moneyness_s_over_k"],
        "strike": STRIKES,
        "price_merton": pm,
        "price_utility_log": pu,
        "price_minvar": pv,
    }
    return cols


def fig1():
    return _price_figure(0.05)


def fig2():
    return _price_figure(-0.05)


def fig3():
    market = figure_market(0.05)
    _, iv_log = _smile(market, MarginalUtility(Power(1.0), optimal_fraction_power(market, 1.0)))
    mon = _moneyness()
    cols = {"moneyness": mon["moneyness"], "iv_utility_log": iv_log}
    for beta in FIG3_BETAS:
        _, iv = _smile(market, MarginalUtility(Power(beta), optimal_fraction_power(market, beta)))
        cols[f"diff_beta_{beta:g}"] = iv - iv_log
    # the marginal price is the same for every alpha
    _, iv_exp = _smile(market, MarginalUtility(Exponential(1.0), optimal_amount_exponential(market, 1.0)))
    cols["diff_exponential"] = iv_exp - iv_log
    cols.update({k: mon[k] for k in ("moneyness_k_over_s", "moneyness_s_over_k", "strike")})
    return cols


def implied_drift_markets():
    """Per-beta markets whose optimal fraction is ``FIG4_PI``."""
    base = figure_market(0.0)
    out = {}
    for beta in FIG4_BETAS:
        out[beta] = base.with_mu(implied_drift(Fraction(FIG4_PI), base, Power(beta)))
    return out


def fig4():
    mon = _moneyness()
    cols = {"moneyness": mon["moneyness"]}
    for beta, market in implied_drift_markets().items():
        _, iv = _smile(market, MarginalUtility(Power(beta), Fraction(FIG4_PI)))
        cols[f"iv_beta_{beta:g}"] = iv
    cols["iv_black_scholes"] = np.full(STRIKES.shape, figure_market().sigma)
    cols.update({k: mon[k] for k in ("moneyness_k_over_s", "moneyness_s_over_k", "strike")})
    return cols


def _hedge_setup():
    market = figure_market(0.05)
    claim = ClaimSpec(Put(100.0), MATURITY)
    log_util = MarginalUtility(Power(1.0), optimal_fraction_power(market, 1.0))
    merton_sol = solve_pide(pricing_measure(market, Merton()), claim, market)
    log_sol = solve_pide(pricing_measure(market, log_util), claim, market)
    return market, claim, log_util, merton_sol, log_sol


def fig5():
    market, claim, log_util, merton_sol, log_sol = _hedge_setup()
    mv_sol = solve_pide(pricing_measure(market, MinimalVariance()), claim, market)
    return {
        "s": HEDGE_S,
        "units_merton_delta": delta_hedge(merton_sol).at(HEDGE_S),
        "units_marginal_optimal": marginal_optimal_hedge(log_sol, market, hedge_weights(market, log_util)).at(HEDGE_S),
        "units_minimal_variance": minimal_variance_hedge(mv_sol, market).at(HEDGE_S),
    }


def fig6():
    market, claim, log_util, merton_sol, log_sol = _hedge_setup()
    return {
        "s": HEDGE_S,
        "units_merton_delta": delta_hedge(merton_sol).at(HEDGE_S),
        "units_marginal_optimal": marginal_optimal_hedge(log_sol, market, hedge_weights(market, log_util)).at(HEDGE_S),
        "units_price_derivative": derivative_of_price_hedge(log_sol).at(HEDGE_S),
    }


FIGURES: dict[str, Callable[[], dict]] = {
    "fig1": fig1,
    "fig2": fig2,
    "fig3": fig3,
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
}


def figure_columns(name: str) -> dict:
    try:
        build = FIGURES[name]
    except KeyError:
        raise UnknownFigure(f"unknown figure {name!r}; expected one of {', '.join(FIGURES)}") from None
    return build()


def write_columns(cols: dict, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(cols))
    for row in zip(*cols.values()):
        writer.writerow([repr(float(v)) for v in row])


def reproduce_figure(name: str, out_path) -> dict:
    """Write the data of figure ``name`` to ``out_path`` and return its columns."""
    cols = figure_columns(name)
    with open(out_path, "w", newline="") as fh:
        write_columns(cols, fh)
    return cols
