"""End-to-end acceptance checks, one test per criterion.

Each test records a single ``PASS``/``FAIL`` line; the lines are printed in the
terminal summary (see ``conftest.py``) and, with ``-s``, as each test runs.
"""

import csv
import io
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from jumphedge.cli import figures
from jumphedge.cli.main import SIGNED_WARNING, main
from jumphedge.errors import NegativeIntensity
from jumphedge.hedging import marginal_optimal_hedge, minimal_variance_hedge
from jumphedge.invest import (
    Fraction,
    implied_drift,
    log_fixed_jump_discriminant,
    optimal_amount_exponential,
    optimal_fraction_log_fixed_jump,
    optimal_fraction_power,
)
from jumphedge.measure import MarginalUtility, Merton, MinimalVariance, hedge_weights, pricing_measure
from jumphedge.model import ClaimSpec, Custom, Exponential, JumpMeasure, MarketParams, Power, Put
from jumphedge.oracle import LatticeSpec, McSpec, lattice_indifference_price, mc_marginal_price
from jumphedge.pricing import GridSpec, black_scholes, price_series_fixed_jump, solve_pide

from .conftest import record_acceptance

S_BAND = np.linspace(50.0, 200.0, 151)
STRIKE = 100.0


def check(number, title, passed, detail):
    record_acceptance(number, title, bool(passed), detail)
    assert passed, f"criterion {number} ({title}) failed: {detail}"


def rel(a, b):
    return np.abs(np.asarray(a) / np.asarray(b) - 1.0)


def unsigned_methods(market):
    return {
        "merton": Merton(),
        "log": MarginalUtility(Power(1.0), optimal_fraction_power(market, 1.0)),
        "exponential": MarginalUtility(Exponential(1.0), optimal_amount_exponential(market, 1.0)),
        "minvar": MinimalVariance(),
    }


def test_01_pure_diffusion_reduces_to_black_scholes():
    start = time.perf_counter()
    market = MarketParams(0.1, 0.2, 0.0, JumpMeasure(()))
    claim = ClaimSpec(Put(STRIKE), 1.0)
    grid = GridSpec.default(claim, (), n_space=3200, n_time=400)
    values = {}
    for name, method in unsigned_methods(market).items():
        values[name] = solve_pide(pricing_measure(market, method), claim, market, grid).value(S_BAND)
    elapsed = time.perf_counter() - start
    bs = black_scholes(S_BAND, STRIKE, 0.0, 0.0, 0.2, 1.0)
    err = max(float(rel(v, bs).max()) for v in values.values())
    spread = max(float(np.abs(v - values["merton"]).max()) for v in values.values())
    check(
        1,
        "pure diffusion = Black-Scholes",
        err < 2e-3 and spread == 0.0 and elapsed < 5.0,
        f"max rel err {err:.2e} (< 2e-3), framework spread {spread:.1e}, {elapsed:.2f}s (< 5s)",
    )


def test_02_pide_matches_series(fig1_market, put100):
    start = time.perf_counter()
    z = float(fig1_market.jumps.z[0])
    worst = {}
    for name, method in unsigned_methods(fig1_market).items():
        measure = pricing_measure(fig1_market, method)
        pide = solve_pide(measure, put100, fig1_market).value(S_BAND)
        series = price_series_fixed_jump(measure.adjusted_intensities[0], z, fig1_market, put100, S_BAND)
        worst[name] = float(rel(pide, series).max())
    elapsed = time.perf_counter() - start
    err = max(worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    check(2, "PIDE vs series", err < 1e-3 and elapsed < 10.0, f"max rel err {detail} (< 1e-3), {elapsed:.2f}s (< 10s)")


def _independent_log_root(market):
    # log-utility first-order condition solved by bracketing on the admissible interval
    jt = float(market.jumps.relative_sizes[0])
    lam = float(market.jumps.intensities[0])

    def f(p):
        return market.mu - p * market.sigma**2 + lam * jt / (1.0 + p * jt)

    edge = -1.0 / jt  # post-jump wealth vanishes here
    if jt < 0:
        lo, hi = -1e6, edge * (1.0 - 1e-12)
    else:
        lo, hi = edge * (1.0 - 1e-12), 1e6
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def test_03_log_closed_form_matches_root():
    worst_err, worst_disc = 0.0, math.inf
    for mu in np.linspace(0.05, 0.2, 5):
        for sigma in np.linspace(0.1, 0.3, 5):
            for lam in np.linspace(0.1, 0.5, 5):
                market = MarketParams(float(mu), float(sigma), 0.0, JumpMeasure.single(-0.25, float(lam)))
                closed = optimal_fraction_log_fixed_jump(market).pi_tilde
                root = _independent_log_root(market)
                worst_err = max(worst_err, abs(closed - root), abs(closed - optimal_fraction_power(market, 1.0).pi_tilde))
                worst_disc = min(worst_disc, log_fixed_jump_discriminant(market))
    check(
        3,
        "log closed form = root",
        worst_err <= 1e-10 and worst_disc > 0.0,
        f"125 markets, max |closed - root| {worst_err:.1e} (<= 1e-10), min discriminant {worst_disc:.3g} (> 0)",
    )


def test_04_large_beta_approaches_exponential(fig1_market):
    beta = 1000.0
    scaled = beta * optimal_fraction_power(fig1_market, beta).pi_tilde
    pi_bar = optimal_amount_exponential(fig1_market, 1.0).pi_bar
    frac_err = abs(scaled - pi_bar) / abs(pi_bar)
    cols = figures.fig3()
    vol_gap = float(np.nanmax(np.abs(cols["diff_beta_1000"] - cols["diff_exponential"])))
    check(
        4,
        "beta -> infinity limit",
        frac_err <= 0.01 and vol_gap <= 1e-3 and not np.isnan(cols["diff_beta_1000"]).any(),
        f"|beta pi - pi_bar|/|pi_bar| {frac_err:.2e} (<= 1e-2), max vol gap {vol_gap:.2e} (<= 1e-3)",
    )


def test_05_price_ordering_follows_drift():
    up, down = figures.fig1(), figures.fig2()
    atm = int(np.argmin(np.abs(up["strike"] - STRIKE)))
    ok = True
    notes = []
    for col in ("iv_utility_log", "iv_minvar"):
        gap_up = up[col] - up["iv_merton"]
        gap_down = down[col] - down["iv_merton"]
        ok &= bool(np.all(gap_up >= 0.0) and np.all(gap_down <= 0.0))
        ok &= bool(gap_up[atm] > 0.0 and gap_down[atm] < 0.0)
        notes.append(f"{col}: min up-gap {gap_up.min():.2e}, max down-gap {gap_down.max():.2e}, ATM {gap_up[atm]:.4f}/{gap_down[atm]:.4f}")
    check(5, "ordering vs drift", ok, "; ".join(notes))


def test_06_forty_percent_at_half_moneyness():
    cols = figures.fig1()
    diff = cols["price_utility_log"] / cols["price_merton"] - 1.0
    found = {}
    for conv in ("moneyness_k_over_s", "moneyness_s_over_k"):
        i = int(np.argmin(np.abs(cols[conv] - 0.5)))
        assert cols[conv][i] == pytest.approx(0.5)
        found[conv] = float(diff[i])
    matching = [c for c, d in found.items() if abs(d - 0.40) <= 0.10]
    detail = ", ".join(f"{c}: {d:+.1%}" for c, d in found.items())
    check(6, "40% price difference", bool(matching), f"{detail}; matching convention: {', '.join(matching) or 'none'}")


def test_07_hedge_difference_at_200():
    cols = figures.fig5()
    i = int(np.argmin(np.abs(cols["s"] - 200.0)))
    delta = cols["units_merton_delta"][i]
    marginal = cols["units_marginal_optimal"][i]
    diff = abs(marginal - delta) / abs(delta)
    check(7, "hedge difference at s=200", diff > 1.5, f"delta {delta:.5f}, marginal {marginal:.5f}, rel diff {diff:.1%} (> 150%)")


def test_08_price_derivative_close_to_delta():
    cols = figures.fig6()
    band = (cols["s"] >= 50.0) & (cols["s"] <= 200.0)
    delta = cols["units_merton_delta"][band]
    d_price = float(np.abs(cols["units_price_derivative"][band] - delta).max())
    d_marginal = float(np.abs(cols["units_marginal_optimal"][band] - delta).max())
    check(
        8,
        "price derivative ~ delta",
        2.0 * d_price <= d_marginal,
        f"sup |dP/ds - delta| {d_price:.4f}, sup |marginal - delta| {d_marginal:.4f}, ratio {d_marginal / d_price:.1f} (>= 2)",
    )


def test_09_implied_drift_mode():
    cols = figures.fig4()
    atm = int(np.argmin(np.abs(cols["strike"] - STRIKE)))
    atm_vols = [float(cols[f"iv_beta_{b:g}"][atm]) for b in (1.0, 2.0, 5.0)]
    increasing = atm_vols[0] < atm_vols[1] < atm_vols[2]
    bs_vol = 0.2
    all_vols = np.concatenate([cols[f"iv_beta_{b:g}"] for b in figures.FIG4_BETAS])
    above = bool(np.all(all_vols > bs_vol))

    base = figures.figure_market(0.0)
    claim = ClaimSpec(Put(STRIKE), 1.0)
    zero_ok = True
    notes = []
    for beta in (1.0, 2.0, 5.0):
        market = base.with_mu(implied_drift(Fraction(0.0), base, Power(beta)))
        method = MarginalUtility(Power(beta), Fraction(0.0))
        sol = solve_pide(pricing_measure(market, method), claim, market)
        merton = solve_pide(pricing_measure(market, Merton()), claim, market).value(STRIKE)
        price_err = abs(sol.value(STRIKE) / merton - 1.0)
        marginal = marginal_optimal_hedge(sol, market, hedge_weights(market, method)).units_of_asset
        minvar_unit = minimal_variance_hedge(sol, market).units_of_asset
        hedge_gap = float(np.abs(marginal - minvar_unit).max())
        zero_ok &= price_err <= 1e-3 and hedge_gap <= 1e-12
        notes.append(f"beta {beta:g}: price err {price_err:.1e}, hedge gap {hedge_gap:.1e}")
    check(
        9,
        "implied-drift mode",
        increasing and above and zero_ok,
        f"ATM vols {', '.join(f'{v:.4f}' for v in atm_vols)}; min vol {all_vols.min():.4f} (> {bs_vol}); pi=0: {'; '.join(notes)}",
    )


def test_10_oracles_agree_with_pide(fig1_market, put100):
    start = time.perf_counter()
    method = MarginalUtility(Power(1.0), optimal_fraction_power(fig1_market, 1.0))
    pide = solve_pide(pricing_measure(fig1_market, method), put100, fig1_market).value(100.0)
    mc = mc_marginal_price(fig1_market, Power(1.0), put100, McSpec(n_paths=100_000))
    lattice = lattice_indifference_price(fig1_market, Power(1.0), put100, lattice=LatticeSpec(n_steps=10))
    elapsed = time.perf_counter() - start
    z_score = (mc.estimate - pide) / mc.standard_error
    lat_err = abs(lattice.richardson / pide - 1.0)
    check(
        10,
        "oracle agreement",
        abs(z_score) <= 3.0 and lat_err <= 0.02 and elapsed < 60.0,
        f"PIDE {pide:.4f}; MC {mc.estimate:.4f} +/- {mc.standard_error:.4f} ({z_score:+.2f} SE); "
        f"lattice Richardson {lattice.richardson:.4f} ({lat_err:.2%}); {elapsed:.1f}s (< 60s)",
    )


def test_11_asset_is_a_martingale(fig1_market):
    claim = ClaimSpec(Custom((1.0, 2.0), (1.0, 2.0)), 1.0)
    worst = {}
    for name, method in unsigned_methods(fig1_market).items():
        v = solve_pide(pricing_measure(fig1_market, method), claim, fig1_market).value(S_BAND)
        worst[name] = float(rel(v, S_BAND).max())
    err = max(worst.values())
    check(11, "martingale C(s)=s", err <= 1e-3, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (<= 1e-3)")


def test_12_signed_minimal_variance(tmp_path, capsys):
    market = MarketParams(0.3, 0.2, 0.0, JumpMeasure.single(1.0, 0.1))
    measure = pricing_measure(market, MinimalVariance())
    claim = ClaimSpec(Put(170.0), 0.25)
    with pytest.raises(NegativeIntensity):
        price_series_fixed_jump(measure.adjusted_intensities[0], float(market.jumps.z[0]), market, claim, 100.0)

    cfg = tmp_path / "signed.cfg"
    cfg.write_text(
        "[market]\nmu = 0.3\nsigma = 0.2\nrelative_jumps = 1.0:0.1\n"
        "[claim]\nkind = call\nstrike = 170\nmaturity = 0.25\n"
        "[pricing]\nmethod = minvar\n"
    )
    out = tmp_path / "price.csv"
    code = main(["price", "--config", str(cfg), "--out", str(out)])
    err = capsys.readouterr().err
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    price = float(rows[0]["price"])
    check(
        12,
        "signed minimal-variance measure",
        measure.signed and code == 0 and SIGNED_WARNING in err and price < 0.0,
        f"lambda_bar {measure.adjusted_intensities[0]:.4f}, signed={measure.signed}, series refused, "
        f"exit {code}, warning printed={SIGNED_WARNING in err}, PIDE price of a nonnegative call {price:.5f}",
    )
