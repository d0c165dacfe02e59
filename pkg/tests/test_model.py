import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jumphedge.errors import ValidationError
from jumphedge.model import (
    Call,
    ClaimSpec,
    Custom,
    Exponential,
    JumpAtom,
    JumpMeasure,
    MarketParams,
    Power,
    Put,
    jump_moment,
    validate_claim,
    validate_market,
    validate_utility,
)

from .conftest import FIG1_MU, LOG_075


def test_fig1_market_accepted(fig1_market):
    assert validate_market(fig1_market) is fig1_market
    assert fig1_market.mu == pytest.approx(FIG1_MU, abs=1e-15)
    assert fig1_market.jumps.z[0] == pytest.approx(LOG_075)


def test_average_drift_roundtrip(fig1_market):
    assert fig1_market.mu_tilde == pytest.approx(0.05, abs=1e-15)


def test_jump_moment_single_atom():
    jumps = JumpMeasure([JumpAtom(LOG_075, 0.25)])
    assert jump_moment(jumps, 1) == pytest.approx(-0.0625)
    assert jump_moment(jumps, 2) == pytest.approx(0.015625)
    assert jump_moment(jumps, 1, weights=[2.0]) == pytest.approx(-0.125)


def test_empty_measure_moments_vanish():
    assert jump_moment(JumpMeasure(()), 1) == 0.0


@pytest.mark.parametrize(
    "params, fragment",
    [
        (MarketParams(0.1, 0.0), "sigma"),
        (MarketParams(0.1, -0.2), "sigma"),
        (MarketParams(float("nan"), 0.2), "mu"),
        (MarketParams(0.1, 0.2, jumps=JumpMeasure([(0.0, 0.3)])), "no-op"),
        (MarketParams(0.1, 0.2, jumps=JumpMeasure([(-0.2, 0.0)])), "intensity"),
        (MarketParams(0.1, 0.2, jumps=JumpMeasure([(-0.2, -1.0)])), "intensity"),
        (MarketParams(0.1, 0.2, jumps=JumpMeasure([(float("inf"), 1.0)])), "finite"),
    ],
)
def test_invalid_markets(params, fragment):
    with pytest.raises(ValidationError, match=fragment):
        validate_market(params)


@pytest.mark.parametrize("utility", [Power(0.5), Power(float("nan")), Exponential(0.0), Exponential(-1.0)])
def test_invalid_utilities(utility):
    with pytest.raises(ValidationError):
        validate_utility(utility)


def test_log_utility_is_power_one():
    u = Power(1.0)
    assert u(math.e) == pytest.approx(1.0)
    assert u.marginal(2.0) == pytest.approx(0.5)
    assert u.log_marginal(2.0) == pytest.approx(-math.log(2.0))


def test_exponential_marginal_consistent():
    u = Exponential(0.3)
    x = np.linspace(-2, 2, 5)
    h = 1e-6
    fd = (u(x + h) - u(x - h)) / (2 * h)
    np.testing.assert_allclose(u.marginal(x), fd, rtol=1e-6)
    np.testing.assert_allclose(np.log(u.marginal(x)), u.log_marginal(x), rtol=1e-12)


def test_vanilla_payoffs():
    s = np.array([50.0, 100.0, 150.0])
    np.testing.assert_array_equal(Put(100.0).payoff(s), [50.0, 0.0, 0.0])
    np.testing.assert_array_equal(Call(100.0).payoff(s), [0.0, 0.0, 50.0])


def test_custom_payoff_extends_linearly():
    c = Custom((1.0, 2.0, 3.0), (0.0, 1.0, 1.0))
    np.testing.assert_allclose(c.payoff([0.5, 1.5, 4.0]), [-0.5, 0.5, 1.0])
    assert np.all(Custom.constant(7.0).payoff([0.1, 10.0, 1e4]) == 7.0)


@pytest.mark.parametrize(
    "claim",
    [
        ClaimSpec(Put(100.0), 0.0),
        ClaimSpec(Put(-1.0), 1.0),
        ClaimSpec(Custom((2.0, 1.0), (0.0, 1.0)), 1.0),
        ClaimSpec(Custom((1.0,), (0.0,)), 1.0),
    ],
)
def test_invalid_claims(claim):
    with pytest.raises(ValidationError):
        validate_claim(claim)


@given(
    jt=st.floats(-0.9, 2.0).filter(lambda v: abs(v) > 1e-6),
    lam=st.floats(0.01, 5.0),
    mu_tilde=st.floats(-0.5, 0.5),
)
def test_average_drift_inverse(jt, lam, mu_tilde):
    m = MarketParams.from_average_drift(mu_tilde, 0.2, 0.0, JumpMeasure.single(jt, lam))
    assert m.mu + jt * lam == pytest.approx(mu_tilde, abs=1e-12)
    assert m.mu_tilde == pytest.approx(mu_tilde, abs=1e-12)
