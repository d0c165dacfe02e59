"""Monte Carlo estimate of the marginal price as a marginal-utility-weighted mean.

The marginal price is ``E[U'(X_T) C(S_T)] / E[U'(X_T)]`` where ``X`` follows
the optimal strategy.  Log prices take exact lognormal diffusion steps plus
Bernoulli-thinned jumps (atom ``i`` fires in a step with probability
``intensity_i dt``); wealth is rebalanced at the step dates.

Paths are generated in fixed-size blocks, block ``b`` drawing from the stream
``SeedSequence(seed, spawn_key=(b,))``, so the estimate does not depend on how
blocks are spread over workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..errors import PathBlowup, ValidationError
from ..invest import Amount, optimal_investment
from ..model import ClaimSpec, MarketParams, Power, UtilitySpec, validate_claim, validate_market, validate_utility

log = logging.getLogger(__name__)

BLOCK_PATHS = 4096
BLOWUP_LIMIT = 1e-3


@dataclass(frozen=True)
class McSpec:
    n_paths: int = 100_000
    n_steps: int = 100
    seed: int = 20240601
    antithetic: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 2 or self.n_steps < 1 or self.workers < 1:
            raise ValidationError("n_paths >= 2, n_steps >= 1 and workers >= 1 required")
        if self.antithetic and self.n_paths % 2:
            raise ValidationError("antithetic sampling needs an even n_paths")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in 64 bits")


class McEstimate(NamedTuple):
    estimate: float
    standard_error: float


def ratio_estimator(marginal_utilities, payoffs, pairs: bool = False) -> McEstimate:
    """``sum(w C) / sum(w)`` with a delta-method standard error.

    With ``pairs`` the inputs are ordered ``(path, antithetic twin)`` and the
    error is computed from pair means.
    """
    w = np.asarray(marginal_utilities, dtype=float)
    c = np.asarray(payoffs, dtype=float)
    if w.shape != c.shape or w.ndim != 1:
        raise ValidationError("weights and payoffs must be matching 1-d arrays")
    w_sum = w.sum()
    if not w_sum > 0.0:
        raise ValidationError("marginal utilities must have a positive sum")
    est = float((w * c).sum() / w_sum)
    resid = w * (c - est)
    if pairs:
        resid = 0.5 * (resid[0::2] + resid[1::2])
    n = resid.size
    w_mean = w_sum / w.size
    se = float(np.sqrt(resid.var(ddof=1) / n) / w_mean) if n > 1 else float("nan")
    return McEstimate(est, se)


def _block(market: MarketParams, policy: float, is_power: bool, tau: float, mc: McSpec, spot: float, index: int, size: int):
    """Terminal (log price, log-or-level wealth, blowup mask) for one block."""
    rng = np.random.default_rng(np.random.SeedSequence(mc.seed, spawn_key=(index,)))
    dt = tau / mc.n_steps
    n_draw = size // 2 if mc.antithetic else size
    drift = (market.mu - 0.5 * market.sigma**2) * dt
    vol = market.sigma * math.sqrt(dt)
    z = market.jumps.z
    p = market.jumps.intensities * dt
    log_s = np.full(size, math.log(spot))
    wealth = np.full(size, 1.0 if is_power else 0.0)
    dead = np.zeros(size, dtype=bool)
    for _ in range(mc.n_steps):
        normals = rng.standard_normal(n_draw)
        if mc.antithetic:
            normals = np.column_stack([normals, -normals]).ravel()
        step = drift + vol * normals
        if z.size:
            fired = rng.random((n_draw, z.size)) < p
            if mc.antithetic:
                fired = np.repeat(fired, 2, axis=0)
            step = step + fired @ z
        log_s += step
        excess = np.expm1(step)
        if is_power:
            wealth = wealth * (1.0 + policy * excess)
            dead |= wealth <= 0.0
        else:
            wealth = wealth + policy * excess
    return log_s, wealth, dead


def mc_marginal_price(
    market: MarketParams,
    utility: UtilitySpec,
    claim: ClaimSpec,
    mc: McSpec,
    spot: float = 100.0,
    t: float = 0.0,
) -> McEstimate:
    """Marginal price of ``claim`` at ``(t, spot)`` under the optimal strategy.

    Power utility trades the optimal fraction of wealth, exponential utility
    the optimal amount; initial wealth cancels from the ratio.  Paths whose
    wealth reaches zero are dropped and counted, and more than 0.1% of them
    raises ``PathBlowup``.
    """
    validate_market(market)
    validate_utility(utility)
    validate_claim(claim)
    tau = claim.maturity - t
    if tau <= 0.0:
        raise ValidationError("valuation time must precede maturity")
    if float(np.sum(market.jumps.intensities)) * tau / mc.n_steps > 1.0:
        raise ValidationError("time step too coarse for jump thinning: sum(intensity) dt > 1")
    inv = optimal_investment(market, utility)
    is_power = isinstance(utility, Power)
    policy = inv.amount if isinstance(inv, Amount) else inv.pi_tilde

    sizes = [BLOCK_PATHS] * (mc.n_paths // BLOCK_PATHS)
    if mc.n_paths % BLOCK_PATHS:
        sizes.append(mc.n_paths % BLOCK_PATHS)
    jobs = [(market, policy, is_power, tau, mc, spot, i, n) for i, n in enumerate(sizes)]
    if mc.workers > 1:
        with ThreadPoolExecutor(mc.workers) as pool:
            parts = list(pool.map(lambda a: _block(*a), jobs))
    else:
        parts = [_block(*a) for a in jobs]
    log_s = np.concatenate([q[0] for q in parts])
    wealth = np.concatenate([q[1] for q in parts])
    dead = np.concatenate([q[2] for q in parts])

    n_dead = int(dead.sum())
    if n_dead > BLOWUP_LIMIT * mc.n_paths:
        raise PathBlowup(f"{n_dead} of {mc.n_paths} paths hit nonpositive wealth", n_dead)
    if n_dead:
        log.warning("dropping %d paths with nonpositive wealth", n_dead)
    if mc.antithetic and n_dead:
        # drop whole pairs so the pair structure survives
        dead = np.repeat(dead.reshape(-1, 2).any(axis=1), 2)
    keep = ~dead
    with np.errstate(divide="ignore"):
        log_w = utility.log_marginal(np.where(keep, wealth, 1.0))
    log_w = log_w[keep]
    weights = np.exp(log_w - log_w.max())
    payoff = claim.payoff(np.exp(log_s[keep]))
    return ratio_estimator(weights, payoff, pairs=mc.antithetic)
