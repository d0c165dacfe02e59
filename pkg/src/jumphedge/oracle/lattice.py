"""Discrete-time dynamic programming for expected utility and indifference prices.

Each period the log price moves by ``+-sigma sqrt(dt)`` (probabilities chosen to
match the real-world drift) and, independently, atom ``i`` fires with
probability ``intensity_i dt``.  The investor picks, at every (wealth, price)
node, the position maximizing next-period expected value; the search is a
coarse scan followed by golden-section refinement, vectorized over all nodes.

Off-grid wealth is interpolated in the utility-transformed variable ``U(x)``,
in which the claim-free value function is affine.  For power utility and a
short claim, wealth is measured above the floor ``epsilon max C`` below which
the terminal utility is undefined, and policies are fractions of that surplus.
Cash earns nothing: the lattice requires ``rate = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import LatticeError, NoBracket, ValidationError
from ..invest import optimal_investment
from ..model import ClaimSpec, Exponential, MarketParams, Power, UtilitySpec, validate_claim, validate_market, validate_utility

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_SCAN = 41


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice resolution.

    The asset grid is log-uniform with spacing ``sigma sqrt(dt) / asset_refine``
    around ``spot``; ``asset_min``/``asset_max`` are rounded outwards to nodes.
    Policies are fractions of wealth (of the surplus over the floor) for
    power utility and amounts for exponential utility; the default bracket
    keeps every branch solvent.  Wealth bounds are surpluses over the floor.
    ``smooth_payoff`` replaces the terminal payoff by its average over one
    diffusion move, which removes the odd/even oscillation in ``n_steps``.
    """

    n_steps: int = 10
    horizon: float = 1.0
    spot: float = 100.0
    wealth: float = 100.0
    n_wealth: int = 41
    wealth_min: Optional[float] = None
    wealth_max: Optional[float] = None
    asset_min: Optional[float] = None
    asset_max: Optional[float] = None
    asset_refine: int = 1
    policy_lo: Optional[float] = None
    policy_hi: Optional[float] = None
    policy_tol: float = 1e-7
    smooth_payoff: bool = True

    def __post_init__(self):
        if self.n_steps < 1 or self.n_wealth < 4 or self.asset_refine < 1:
            raise ValidationError("lattice counts must be positive (n_wealth >= 4)")
        if not (self.horizon > 0 and self.spot > 0 and self.policy_tol > 0):
            raise ValidationError("horizon, spot and policy_tol must be positive")


@dataclass
class _Branches:
    prob: np.ndarray
    log_return: np.ndarray

    @property
    def gross(self) -> np.ndarray:
        return np.exp(self.log_return)


def _branches(market: MarketParams, dt: float) -> _Branches:
    h = market.sigma * math.sqrt(dt)
    up = (math.exp(market.mu * dt) - math.exp(-h)) / (math.exp(h) - math.exp(-h))
    if not 0.0 < up < 1.0:
        raise LatticeError(f"time step too coarse: up-probability {up:.4f} outside (0, 1)")
    jump_p = market.jumps.intensities * dt
    total = float(jump_p.sum()) if jump_p.size else 0.0
    if total > 0.9:
        jump_p = jump_p * (0.9 / total)
        total = 0.9
    outcomes_p = np.concatenate([[1.0 - total], jump_p])
    outcomes_z = np.concatenate([[0.0], market.jumps.z])
    prob, logr = [], []
    for pd, dz in ((up, h), (1.0 - up, -h)):
        for pj, z in zip(outcomes_p, outcomes_z):
            prob.append(pd * pj)
            logr.append(dz + z)
    return _Branches(np.asarray(prob), np.asarray(logr))


def _transform(utility: UtilitySpec, x):
    """Abscissa used for wealth interpolation: the utility itself."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = utility(x)
    if isinstance(utility, Power):
        out = np.where(np.asarray(x) > 0, out, -np.inf)
    return out


def _lerp(a, b, w):
    with np.errstate(invalid="ignore"):
        mixed = (1.0 - w) * a + w * b
    return np.where(w == 0.0, a, np.where(w == 1.0, b, mixed))


@dataclass
class LatticeResult:
    market: MarketParams
    utility: UtilitySpec
    spec: LatticeSpec
    times: np.ndarray
    wealth: np.ndarray
    asset: np.ndarray
    values: np.ndarray
    policy: np.ndarray
    marginal: Optional[np.ndarray]
    claim: Optional[ClaimSpec]
    epsilon: float
    _branches: _Branches
    _bracket: tuple[float, float]
    floor: float = 0.0

    @property
    def spot_index(self) -> int:
        return int(np.argmin(np.abs(np.log(self.asset / self.spec.spot))))

    def value_at(self, x, s_index: Optional[int] = None):
        """Optimal time-0 value and policy at arbitrary wealth, one period before the grid at ``t = dt``."""
        j = self.spot_index if s_index is None else s_index
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nodes = np.full(x.shape, j)
        value, pol = _optimize(self, self.values[1], x, nodes)
        return value, pol

    def marginal_fd(self, t_index: int = 0) -> np.ndarray:
        """Central-difference ``du/dx`` on interior wealth nodes (spot column)."""
        j = self.spot_index
        u = self.values[t_index, :, j]
        x = self.wealth
        return (u[2:] - u[:-2]) / (x[2:] - x[:-2])


def _interp_asset(values: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Interpolate every wealth row at fractional asset positions ``pos``."""
    n_s = values.shape[1]
    pos = np.clip(pos, 0.0, n_s - 1)
    i0 = np.minimum(np.floor(pos).astype(int), n_s - 2)
    w = pos - i0
    return _lerp(values[:, i0], values[:, i0 + 1], w[None, :])


def _interp_wealth(res: LatticeResult, table: np.ndarray, x_new: np.ndarray, cols: np.ndarray, transform) -> np.ndarray:
    """Interpolate ``table[:, col]`` at wealth ``x_new`` in the abscissa ``transform(x)``.

    Cubic Lagrange on four nodes; linear where the stencil leaves the grid or
    touches a non-finite value.  The linear rule's error is first order in
    the claim size and would not cancel in the indifference price.
    """
    grid = transform(res.wealth - res.floor)
    q = transform(x_new - res.floor)
    n = grid.size
    k = np.clip(np.searchsorted(grid, q) - 1, 0, n - 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = (q - grid[k]) / (grid[k + 1] - grid[k])
    a = table[k, cols]
    b = table[k + 1, cols]
    out = _lerp(a, b, w)
    km = np.clip(k - 1, 0, n - 1)
    kp = np.clip(k + 2, 0, n - 1)
    pts = [table[km, cols], a, b, table[kp, cols]]
    inner = (k >= 1) & (k + 2 <= n - 1) & (w >= 0.0) & (w <= 1.0)
    inner &= np.isfinite(pts[0]) & np.isfinite(a) & np.isfinite(b) & np.isfinite(pts[3])
    if inner.any():
        xs = [grid[km], grid[k], grid[k + 1], grid[kp]]
        with np.errstate(invalid="ignore", divide="ignore"):
            cubic = np.zeros_like(out)
            for i in range(4):
                basis = np.ones_like(out)
                for j in range(4):
                    if j != i:
                        basis = basis * (q - xs[j]) / (xs[i] - xs[j])
                cubic = cubic + basis * pts[i]
        out = np.where(inner, cubic, out)
    return np.where(np.isneginf(q), -np.inf, out)


def _objective(res: LatticeResult, branch_tables, x, cols, policy):
    """Expected next-period value for policy ``policy`` at nodes ``(x, cols)``."""
    br = res._branches
    amount = policy * (x - res.floor) if isinstance(res.utility, Power) else policy
    total = np.zeros_like(x)
    for p, gross, table in zip(br.prob, br.gross, branch_tables):
        x_new = x + amount * (gross - 1.0)
        val = _interp_wealth(res, table, x_new, cols, lambda v: _transform(res.utility, v))
        with np.errstate(invalid="ignore"):
            total = total + p * val
    return np.where(np.isnan(total), -np.inf, total)


def _branch_tables(res: LatticeResult, next_values: np.ndarray):
    h = res.market.sigma * math.sqrt(res.spec.horizon / res.spec.n_steps) / res.spec.asset_refine
    base = np.arange(res.asset.size, dtype=float)
    return [_interp_asset(next_values, base + lr / h) for lr in res._branches.log_return]


def _optimize(res: LatticeResult, next_values, x, cols, fixed: Optional[float] = None):
    tables = _branch_tables(res, next_values)

    def f(pol):
        return _objective(res, tables, x, cols, pol)

    if fixed is not None:
        pol = np.full_like(x, fixed)
        return f(pol), pol
    lo, hi = res._bracket
    scan = np.linspace(lo, hi, _SCAN)
    vals = np.stack([f(np.full_like(x, p)) for p in scan])
    best = np.argmax(vals, axis=0)
    step = scan[1] - scan[0]
    a = np.maximum(scan[best] - step, lo)
    b = np.minimum(scan[best] + step, hi)
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    iters = int(math.ceil(math.log(res.spec.policy_tol / (2 * step)) / math.log(_GOLDEN))) + 1
    for _ in range(max(iters, 1)):
        left = f1 >= f2
        a = np.where(left, a, x1)
        b = np.where(left, x2, b)
        new_x1 = np.where(left, b - _GOLDEN * (b - a), x2)
        new_x2 = np.where(left, x1, a + _GOLDEN * (b - a))
        probe = np.where(left, new_x1, new_x2)
        fp = f(probe)
        f1, f2 = np.where(left, fp, f2), np.where(left, f1, fp)
        x1, x2 = new_x1, new_x2
    mid = 0.5 * (a + b)
    fm = f(mid)
    best_scan = vals[best, np.arange(x.size)]
    use_scan = best_scan > fm
    pol = np.where(use_scan, scan[best], mid)
    return np.where(use_scan, best_scan, fm), pol


def _default_bracket(market: MarketParams, utility: UtilitySpec, branches: _Branches, spec: LatticeSpec):
    if spec.policy_lo is not None and spec.policy_hi is not None:
        return float(spec.policy_lo), float(spec.policy_hi)
    ret = branches.gross - 1.0
    if isinstance(utility, Power):
        lo = -1.0 / ret.max() if ret.max() > 0 else -10.0
        hi = -1.0 / ret.min() if ret.min() < 0 else 10.0
        lo, hi = 0.98 * lo, 0.98 * hi
    else:
        star = optimal_investment(market, utility).amount
        width = 5.0 * abs(star) + 5.0 / utility.alpha
        lo, hi = star - width, star + width
    lo = spec.policy_lo if spec.policy_lo is not None else lo
    hi = spec.policy_hi if spec.policy_hi is not None else hi
    return float(lo), float(hi)


def _wealth_grid(utility: UtilitySpec, spec: LatticeSpec) -> np.ndarray:
    x0 = spec.wealth
    if isinstance(utility, Power):
        lo = spec.wealth_min if spec.wealth_min is not None else x0 * math.exp(-3.0)
        hi = spec.wealth_max if spec.wealth_max is not None else x0 * math.exp(3.0)
        if lo <= 0:
            raise LatticeError("power utility needs a strictly positive wealth grid")
        return np.exp(np.linspace(math.log(lo), math.log(hi), spec.n_wealth))
    width = max(10.0 / utility.alpha, 0.5 * abs(x0))
    lo = spec.wealth_min if spec.wealth_min is not None else x0 - width
    hi = spec.wealth_max if spec.wealth_max is not None else x0 + width
    return np.linspace(lo, hi, spec.n_wealth)


def _terminal_payoff(claim: ClaimSpec, asset: np.ndarray, h: float, smooth: bool) -> np.ndarray:
    """Payoff on the asset nodes, averaged over one diffusion move in log price when ``smooth``."""
    if not smooth:
        return claim.payoff(asset)
    y, w = np.polynomial.legendre.leggauss(64)
    return 0.5 * (claim.payoff(asset[:, None] * np.exp(h * y[None, :])) * w[None, :]).sum(axis=1)


def _asset_grid(market: MarketParams, spec: LatticeSpec, dt: float) -> np.ndarray:
    h = market.sigma * math.sqrt(dt) / spec.asset_refine
    z = market.jumps.z
    lam_t = market.jumps.total_intensity * spec.horizon
    n_jumps = 3 + int(math.ceil(3.0 * lam_t))
    down = spec.n_steps * market.sigma * math.sqrt(dt) + n_jumps * max(0.0, -float(z.min()) if z.size else 0.0)
    up = spec.n_steps * market.sigma * math.sqrt(dt) + n_jumps * max(0.0, float(z.max()) if z.size else 0.0)
    k_lo = int(math.ceil(down / h)) + 2 * spec.asset_refine
    k_hi = int(math.ceil(up / h)) + 2 * spec.asset_refine
    if spec.asset_min is not None:
        k_lo = int(math.ceil(math.log(spec.spot / spec.asset_min) / h))
    if spec.asset_max is not None:
        k_hi = int(math.ceil(math.log(spec.asset_max / spec.spot) / h))
    return spec.spot * np.exp(h * np.arange(-k_lo, k_hi + 1))


def lattice_expected_utility(
    market: MarketParams,
    utility: UtilitySpec,
    lattice: LatticeSpec,
    claim: Optional[ClaimSpec] = None,
    epsilon: float = 0.0,
    fixed_policy: Optional[float] = None,
    track_marginal: bool = False,
) -> LatticeResult:
    """Backward induction of ``sup E[U(X_T - epsilon C(S_T))]`` on the (wealth, price) lattice.

    ``fixed_policy`` replaces the optimization by a constant policy.  With
    ``track_marginal`` the marginal utility ``E[U'(X_T)]`` is propagated along
    the optimal policy as well.
    """
    validate_market(market)
    validate_utility(utility)
    if market.rate != 0.0:
        raise ValidationError("the lattice has no cash account; use rate = 0")
    horizon = lattice.horizon
    if claim is not None:
        validate_claim(claim)
        horizon = claim.maturity
        if lattice.horizon != horizon:
            lattice = replace(lattice, horizon=horizon)
    dt = horizon / lattice.n_steps
    branches = _branches(market, dt)
    asset = _asset_grid(market, lattice, dt)
    payoff = _terminal_payoff(claim, asset, market.sigma * math.sqrt(dt), lattice.smooth_payoff) if claim is not None else np.zeros(1)
    floor = epsilon * float(payoff.max()) if isinstance(utility, Power) and epsilon > 0.0 else 0.0
    wealth = floor + _wealth_grid(utility, lattice)
    times = np.linspace(0.0, horizon, lattice.n_steps + 1)
    shape = (lattice.n_steps + 1, wealth.size, asset.size)
    values = np.empty(shape)
    policy = np.full((lattice.n_steps,) + shape[1:], np.nan)
    terminal = wealth[:, None] - epsilon * np.atleast_2d(payoff)
    values[-1] = _transform(utility, terminal)
    marginal = None
    if track_marginal:
        marginal = np.empty(shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            marginal[-1] = np.log(utility.marginal(terminal))
    res = LatticeResult(
        market, utility, lattice, times, wealth, asset, values, policy, marginal, claim, epsilon,
        branches, _default_bracket(market, utility, branches, lattice), floor,
    )
    xx, cc = np.meshgrid(wealth, np.arange(asset.size), indexing="ij")
    xf, cf = xx.ravel(), cc.ravel()
    for k in range(lattice.n_steps - 1, -1, -1):
        val, pol = _optimize(res, values[k + 1], xf, cf, fixed_policy)
        values[k] = val.reshape(xx.shape)
        policy[k] = pol.reshape(xx.shape)
        if track_marginal:
            marginal[k] = _propagate_log_marginal(res, marginal[k + 1], xf, cf, pol).reshape(xx.shape)
    if not np.isfinite(values[0, :, res.spot_index]).any():
        raise LatticeError("wealth grid underflow: no admissible strategy at the spot column")
    if track_marginal:
        res.marginal = np.exp(marginal)
    return res


def _propagate_log_marginal(res: LatticeResult, log_next, x, cols, pol):
    """One-step ``E[U'(X_T)]`` under the given policy, interpolating log U' linearly."""
    tables = _branch_tables(res, log_next)
    if isinstance(res.utility, Power):
        transform = lambda v: np.log(np.where(v > 0, v, np.nan))  # noqa: E731
        amount = pol * (x - res.floor)
    else:
        transform = lambda v: v  # noqa: E731
        amount = pol
    total = np.zeros_like(x)
    for p, gross, table in zip(res._branches.prob, res._branches.gross, tables):
        x_new = x + amount * (gross - 1.0)
        grid = transform(res.wealth - res.floor)
        q = transform(x_new - res.floor)
        k = np.clip(np.searchsorted(grid, q) - 1, 0, grid.size - 2)
        w = (q - grid[k]) / (grid[k + 1] - grid[k])
        total = total + p * np.exp(_lerp(table[k, cols], table[k + 1, cols], w))
    return np.log(total)


@dataclass(frozen=True)
class IndifferenceResult:
    epsilons: tuple[float, ...]
    prices: tuple[float, ...]
    richardson: float


def richardson(epsilons, prices) -> float:
    """Linear extrapolation to ``epsilon = 0`` from the two smallest quantities."""
    order = np.argsort(epsilons)
    e1, e2 = (float(epsilons[i]) for i in order[:2])
    p1, p2 = (float(prices[i]) for i in order[:2])
    return p1 + (p1 - p2) * e1 / (e2 - e1)


def lattice_indifference_price(
    market: MarketParams,
    utility: UtilitySpec,
    claim: ClaimSpec,
    epsilon: Optional[float] = None,
    lattice: Optional[LatticeSpec] = None,
    ladder: tuple[float, ...] = (0.2, 0.1, 0.05),
) -> IndifferenceResult:
    """Indifference prices ``v^eps`` for a ladder of short positions.

    With ``epsilon`` given only that quantity is priced; otherwise the ladder
    ``ladder * wealth / strike`` is used.  ``richardson`` holds the linear
    extrapolation to zero quantity.
    """
    lattice = lattice or LatticeSpec(horizon=claim.maturity)
    scale = claim.strike if claim.strike is not None else max(float(np.max(np.abs(claim.payoff(np.asarray(claim.kind.s))))), 1.0)
    if epsilon is not None:
        if epsilon <= 0:
            raise ValidationError("epsilon must be > 0")
        eps = (float(epsilon),)
    else:
        eps = tuple(c * lattice.wealth / scale for c in ladder)
    base = lattice_expected_utility(market, utility, lattice, claim, 0.0)
    u0 = float(base.value_at(lattice.wealth)[0][0])
    prices = []
    for e in eps:
        res = lattice_expected_utility(market, utility, lattice, claim, e)
        prices.append(_solve_price(res, u0, e, claim, scale))
    extrapolated = richardson(eps, prices) if len(eps) >= 2 else prices[0]
    return IndifferenceResult(eps, tuple(prices), extrapolated)


def _solve_price(res: LatticeResult, target: float, eps: float, claim: ClaimSpec, scale: float) -> float:
    x0 = res.spec.wealth
    pay = claim.payoff(res.asset)
    lo = float(pay.min()) - 0.05 * scale
    hi = float(pay.max()) + 0.05 * scale

    def gap(v):
        return float(res.value_at(x0 + eps * v)[0][0]) - target

    g_lo, g_hi = gap(lo), gap(hi)
    if not (g_lo <= 0.0 <= g_hi):
        raise NoBracket(f"utility with and without the claim do not cross on [{lo}, {hi}]")
    tol = 1e-6 * scale
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
