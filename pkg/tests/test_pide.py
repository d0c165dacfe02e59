import math

import numpy as np
import pytest

from jumphedge.errors import GridError, ValidationError
from jumphedge.invest import optimal_amount_exponential, optimal_fraction_power
from jumphedge.measure import MarginalUtility, Merton, MinimalVariance, pricing_measure
from jumphedge.model import Call, ClaimSpec, Custom, Exponential, JumpMeasure, MarketParams, Power, Put
from jumphedge.pricing import GridSpec, black_scholes, convergence_gap, price_series_fixed_jump, solve_pide
from jumphedge.pricing.strikes import prices_across_strikes

from .conftest import LOG_075

S_BAND = np.linspace(50.0, 200.0, 61)


def _methods(market):
    return {
        "merton": Merton(),
        "log": MarginalUtility(Power(1.0), optimal_fraction_power(market, 1.0)),
        "power3": MarginalUtility(Power(3.0), optimal_fraction_power(market, 3.0)),
        "exponential": MarginalUtility(Exponential(1.0), optimal_amount_exponential(market, 1.0)),
        "minvar": MinimalVariance(),
    }


@pytest.mark.parametrize("name", ["merton", "log", "power3", "exponential", "minvar"])
def test_pide_matches_series(fig1_market, put100, name):
    q = pricing_measure(fig1_market, _methods(fig1_market)[name])
    sol = solve_pide(q, put100, fig1_market)
    ref = price_series_fixed_jump(q.adjusted_intensities[0], LOG_075, fig1_market, put100, S_BAND)
    np.testing.assert_allclose(sol.value(S_BAND), ref, rtol=1e-3)


def test_pide_call_with_rate(fig1_market):
    market = fig1_market.__class__(fig1_market.mu, 0.2, 0.03, fig1_market.jumps)
    claim = ClaimSpec(Call(100.0), 0.5)
    q = pricing_measure(market, Merton())
    sol = solve_pide(q, claim, market)
    ref = price_series_fixed_jump(0.25, LOG_075, market, claim, S_BAND)
    # deep out-of-the-money calls are worth 1e-5..1e-2; judge them in currency units
    np.testing.assert_allclose(sol.value(S_BAND), ref, rtol=1e-3, atol=1e-3)


def test_pure_diffusion_black_scholes():
    market = MarketParams(0.1, 0.2)
    claim = ClaimSpec(Put(100.0), 1.0)
    sol = solve_pide(pricing_measure(market, Merton()), claim, market)
    ref = black_scholes(S_BAND, 100.0, 0.0, 0.0, 0.2, 1.0)
    np.testing.assert_allclose(sol.value(S_BAND), ref, rtol=2e-2)
    mid = S_BAND <= 150
    np.testing.assert_allclose(sol.value(S_BAND[mid]), ref[mid], rtol=2e-3)


@pytest.mark.parametrize("name", ["merton", "log", "exponential", "minvar"])
def test_martingale_identity_claim(fig1_market, name):
    claim = ClaimSpec(Custom((1.0, 2.0), (1.0, 2.0)), 1.0)
    sol = solve_pide(pricing_measure(fig1_market, _methods(fig1_market)[name]), claim, fig1_market)
    np.testing.assert_allclose(sol.value(S_BAND), S_BAND, rtol=1e-6)


def test_constant_claim_discounted():
    market = MarketParams(0.1, 0.2, 0.05, JumpMeasure.single(-0.25, 0.25))
    claim = ClaimSpec(Custom.constant(3.0), 2.0)
    sol = solve_pide(pricing_measure(market, Merton()), claim, market)
    np.testing.assert_allclose(sol.value(S_BAND), 3.0 * math.exp(-0.1), rtol=1e-6)


def test_two_atom_measure_against_mixture():
    """Two atoms with equal log size must price like one atom with the summed intensity."""
    split = MarketParams(0.1, 0.2, jumps=JumpMeasure([(LOG_075, 0.1), (LOG_075, 0.15)]))
    claim = ClaimSpec(Put(100.0), 1.0)
    sol = solve_pide(pricing_measure(split, Merton()), claim, split)
    ref = price_series_fixed_jump(0.25, LOG_075, split, claim, S_BAND)
    np.testing.assert_allclose(sol.value(S_BAND), ref, rtol=1e-3)


def test_signed_measure_gives_negative_call():
    market = MarketParams(0.3, 0.2, jumps=JumpMeasure([(math.log(2.0), 0.1)]))
    q = pricing_measure(market, MinimalVariance())
    assert q.signed
    sol = solve_pide(q, ClaimSpec(Call(170.0), 0.25), market)
    assert sol.value(100.0) < 0.0


def test_convergence_gap_small(fig1_market, put100):
    sol = solve_pide(pricing_measure(fig1_market, Merton()), put100, fig1_market, check_convergence=True)
    assert convergence_gap(sol) < 5e-3


def test_anchor_on_node(put100):
    g = GridSpec.default(put100, (LOG_075,))
    assert np.any(np.isclose(np.exp(g.log_nodes()), 100.0, rtol=0, atol=1e-12))


def test_grid_error_without_extrapolation(fig1_market, put100):
    grid = GridSpec(10.0, 1000.0, extrapolate=False)
    with pytest.raises(GridError):
        solve_pide(pricing_measure(fig1_market, Merton()), put100, fig1_market, grid)


@pytest.mark.parametrize("kwargs", [dict(s_min=0.0, s_max=10.0), dict(s_min=5.0, s_max=1.0), dict(s_min=1, s_max=10, n_space=8)])
def test_grid_validation(kwargs):
    with pytest.raises(ValidationError):
        GridSpec(**kwargs)


def test_solution_csv(tmp_path, fig1_market, put100):
    grid = GridSpec.default(put100, (LOG_075,), n_space=32, n_time=8)
    sol = solve_pide(pricing_measure(fig1_market, Merton()), put100, fig1_market, grid)
    path = tmp_path / "sol.csv"
    sol.to_csv(path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "t,s,value"
    assert len(lines) == 1 + 9 * 32
    t, s, v = (float(x) for x in lines[1].split(","))
    assert t == 0.0 and s == sol.s[0] and v == sol.values[0, 0]


def test_strike_axis_homogeneity(fig1_market):
    q = pricing_measure(fig1_market, Merton())
    strikes = np.array([60.0, 100.0, 140.0])
    p = prices_across_strikes(q, fig1_market, "put", strikes, 100.0, 1.0)
    ref = [price_series_fixed_jump(0.25, LOG_075, fig1_market, ClaimSpec(Put(k), 1.0), 100.0) for k in strikes]
    np.testing.assert_allclose(p, ref, rtol=1e-3)
