"""Optimal investment for power/log and exponential utility, and the implied drift.

Both first-order conditions have residuals that are strictly decreasing in the
unknown, so a sign change brackets a unique root.  The root is located by a
safeguarded Newton iteration inside the bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError, NoSolution, ValidationError, WrongMeasure
from .model import Exponential, MarketParams, Power, UtilitySpec, validate_market, validate_utility

_SHRINK = 1e-9
_MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class Fraction:
    """Constant fraction of wealth held in the asset (power/log utility)."""

    pi_tilde: float


@dataclass(frozen=True)
class Amount:
    """Scaled constant amount ``pi_bar = alpha * pi`` held in the asset (exponential utility)."""

    pi_bar: float
    alpha: float

    @classmethod
    def from_position(cls, amount: float, alpha: float) -> "Amount":
        return cls(pi_bar=alpha * amount, alpha=alpha)

    @property
    def amount(self) -> float:
        return self.pi_bar / self.alpha


OptimalInvestment = Union[Fraction, Amount]


def _tolerance(market: MarketParams) -> float:
    return 1e-12 * (1.0 + abs(market.mu) + market.sigma**2)


def power_residual(market: MarketParams, beta: float, pi_tilde: float) -> float:
    """``mu - pi beta sigma^2 + sum (e^z-1)(1 + pi (e^z-1))^-beta intensity``."""
    jt = market.jumps.relative_sizes
    lam = market.jumps.intensities
    base = 1.0 + pi_tilde * jt
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        jump = float(np.sum(jt * lam * base ** (-beta))) if jt.size else 0.0
    return market.mu - pi_tilde * beta * market.sigma**2 + jump


def _power_slope(market: MarketParams, beta: float, pi_tilde: float) -> float:
    jt = market.jumps.relative_sizes
    lam = market.jumps.intensities
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        jump = float(np.sum(jt**2 * lam * (1.0 + pi_tilde * jt) ** (-beta - 1.0))) if jt.size else 0.0
    return -beta * market.sigma**2 - beta * jump


def exponential_residual(market: MarketParams, pi_bar: float) -> float:
    """``mu - pi_bar sigma^2 + sum (e^z-1) exp(-pi_bar (e^z-1)) intensity``."""
    jt = market.jumps.relative_sizes
    lam = market.jumps.intensities
    with np.errstate(over="ignore"):
        jump = float(np.sum(jt * lam * np.exp(-pi_bar * jt))) if jt.size else 0.0
    return market.mu - pi_bar * market.sigma**2 + jump


def _exponential_slope(market: MarketParams, pi_bar: float) -> float:
    jt = market.jumps.relative_sizes
    lam = market.jumps.intensities
    with np.errstate(over="ignore"):
        jump = float(np.sum(jt**2 * lam * np.exp(-pi_bar * jt))) if jt.size else 0.0
    return -market.sigma**2 - jump


def admissible_interval(market: MarketParams) -> tuple[float, float]:
    """Open interval of fractions keeping ``1 + pi (e^z - 1) > 0`` for every atom."""
    jt = market.jumps.relative_sizes
    lo, hi = -math.inf, math.inf
    if np.any(jt > 0):
        lo = float(np.max(-1.0 / jt[jt > 0]))
    if np.any(jt < 0):
        hi = float(np.min(-1.0 / jt[jt < 0]))
    return lo, hi


def _expand(f, start: float, direction: float, want_sign: float, step: float) -> float:
    """Walk away from ``start`` doubling the step until ``f`` has sign ``want_sign``."""
    x = start
    for _ in range(_MAX_DOUBLINGS):
        x = start + direction * step
        if np.sign(f(x)) == want_sign or f(x) == 0.0:
            return x
        step *= 2.0
    raise NoSolution("no sign change found while expanding the bracket")


def _decreasing_root(
    f: Callable[[float], float],
    fprime: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
) -> float:
    """Root of a strictly decreasing function bracketed by ``f(lo) >= 0 >= f(hi)``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (flo > 0.0 > fhi):
        raise NoSolution(f"residual has no sign change on [{lo}, {hi}] ({flo}, {fhi})")
    x = 0.0 if lo < 0.0 < hi else 0.5 * (lo + hi)
    for _ in range(500):
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if fx > 0.0:
            lo = x
        else:
            hi = x
        slope = fprime(x)
        step_ok = False
        if math.isfinite(fx) and math.isfinite(slope) and slope < 0.0:
            x_new = x - fx / slope
            if lo < x_new < hi:
                step_ok = True
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            return x_new
        x = x_new
    return x


def optimal_fraction_power(market: MarketParams, beta: float) -> Fraction:
    """Optimal constant wealth fraction for power utility (log utility at ``beta = 1``)."""
    validate_market(market)
    validate_utility(Power(beta))
    lo, hi = admissible_interval(market)
    if math.isfinite(lo):
        lo = lo + _SHRINK * max(1.0, abs(lo))
    if math.isfinite(hi):
        hi = hi - _SHRINK * max(1.0, abs(hi))

    def f(p):
        return power_residual(market, beta, p)

    def fp(p):
        return _power_slope(market, beta, p)

    if not jumps_present(market):
        return Fraction(market.mu / (beta * market.sigma**2))
    scale = (abs(market.mu) + float(np.sum(np.abs(market.jumps.relative_sizes) * market.jumps.intensities))) / (
        beta * market.sigma**2
    ) + 1.0
    if not math.isfinite(lo):
        start = min(0.0, hi) if math.isfinite(hi) else 0.0
        lo = _expand(f, start, -1.0, 1.0, scale)
    if not math.isfinite(hi):
        start = max(0.0, lo)
        hi = _expand(f, start, 1.0, -1.0, scale)
    return Fraction(_decreasing_root(f, fp, lo, hi, _tolerance(market)))


def jumps_present(market: MarketParams) -> bool:
    return len(market.jumps) > 0


def log_fixed_jump_discriminant(market: MarketParams) -> float:
    """Expression under the square root of the closed-form log-utility fraction."""
    jt, lam = _single_atom(market)
    a = market.mu / market.sigma**2
    return (1.0 - a * jt) ** 2 + 4.0 * (market.mu + lam * jt) / market.sigma**2 * jt


def _single_atom(market: MarketParams) -> tuple[float, float]:
    if len(market.jumps) != 1:
        raise WrongMeasure(f"closed form needs exactly one jump atom, got {len(market.jumps)}")
    atom = market.jumps.atoms[0]
    return atom.relative_size, atom.intensity


def optimal_fraction_log_fixed_jump(market: MarketParams) -> Fraction:
    """Closed-form log-utility fraction for a single jump size."""
    validate_market(market)
    jt, lam = _single_atom(market)
    b = 1.0 - market.mu / market.sigma**2 * jt
    c = (market.mu + lam * jt) / market.sigma**2
    root = math.sqrt(log_fixed_jump_discriminant(market))
    # algebraically identical branches; pick the one without cancellation
    if b >= 0.0:
        pi = 2.0 * c / (b + root)
    else:
        pi = (root - b) / (2.0 * jt)
    return Fraction(pi)


def optimal_amount_exponential(market: MarketParams, alpha: float) -> Amount:
    """Optimal scaled amount ``pi_bar`` for exponential utility; ``pi* = pi_bar / alpha``."""
    validate_market(market)
    validate_utility(Exponential(alpha))
    if not jumps_present(market):
        return Amount(market.mu / market.sigma**2, alpha)

    def f(p):
        return exponential_residual(market, p)

    def fp(p):
        return _exponential_slope(market, p)

    bound = (abs(market.mu) + float(np.sum(np.abs(market.jumps.relative_sizes) * market.jumps.intensities))) / (
        market.sigma**2
    ) + 1.0
    for _ in range(_MAX_DOUBLINGS):
        if f(-bound) >= 0.0 >= f(bound):
            break
        bound *= 2.0
    else:
        raise NoSolution("exponential-utility residual has no sign change within the search bounds")
    return Amount(_decreasing_root(f, fp, -bound, bound, _tolerance(market)), alpha)


def optimal_investment(market: MarketParams, utility: UtilitySpec) -> OptimalInvestment:
    if isinstance(utility, Power):
        return optimal_fraction_power(market, utility.beta)
    return optimal_amount_exponential(market, utility.alpha)


def implied_drift(target: OptimalInvestment, market_sans_mu: MarketParams, utility: UtilitySpec) -> float:
    """Drift under which ``target`` is the optimal investment for ``utility``.

    The drift stored in ``market_sans_mu`` is ignored.
    """
    validate_utility(utility)
    jt = market_sans_mu.jumps.relative_sizes
    lam = market_sans_mu.jumps.intensities
    s2 = market_sans_mu.sigma**2
    if isinstance(target, Fraction) and isinstance(utility, Power):
        base = 1.0 + target.pi_tilde * jt
        if np.any(base <= 0.0):
            raise DomainError(f"post-jump wealth nonpositive for fraction {target.pi_tilde}")
        beta = utility.beta
        return float(beta * s2 * target.pi_tilde - np.sum(jt * lam * base ** (-beta)))
    if isinstance(target, Amount) and isinstance(utility, Exponential):
        if not math.isfinite(target.pi_bar):
            raise DomainError("pi_bar must be finite")
        return float(s2 * target.pi_bar - np.sum(jt * lam * np.exp(-target.pi_bar * jt)))
    raise ValidationError(
        f"{type(target).__name__} target cannot be paired with {type(utility).__name__} utility"
    )
