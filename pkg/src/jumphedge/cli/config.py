"""Run configuration: an INI file with market, utility, claim, pricing, grid and output sections.

Example::

    [market]
    mu_tilde = 0.05
    sigma = 0.2
    rate = 0
    relative_jumps = -0.25:0.25

    [utility]
    kind = power
    beta = 1

    [claim]
    kind = put
    strike = 100
    maturity = 1

    [pricing]
    method = utility
    mode = drift-given

Jumps are ``z:intensity`` pairs under ``atoms`` (log sizes) or
``relative_jumps`` (``e^z - 1``), comma separated.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ValidationError
from ..invest import Amount, Fraction, implied_drift, optimal_investment
from ..measure import MarginalUtility, Merton, MinimalVariance, PricingMeasure, pricing_measure
from ..model import (
    Call,
    ClaimSpec,
    Exponential,
    JumpAtom,
    JumpMeasure,
    MarketParams,
    Power,
    Put,
    validate_claim,
    validate_market,
    validate_utility,
)

METHODS = ("merton", "utility", "minvar")
MODES = ("drift-given", "implied-drift")
GRID_KEYS = {"n_space": int, "n_time": int, "s_min": float, "s_max": float, "rannacher": int}


@dataclass
class RunConfig:
    sigma: float
    atoms: tuple[tuple[float, float], ...] = ()
    mu: Optional[float] = None
    mu_tilde: Optional[float] = None
    rate: float = 0.0
    spot: float = 100.0
    utility_kind: str = "power"
    beta: float = 1.0
    alpha: Optional[float] = None
    claim_kind: str = "put"
    strike: float = 100.0
    maturity: float = 1.0
    method: str = "utility"
    mode: str = "drift-given"
    pi_star: Optional[float] = None
    grid: dict = field(default_factory=dict)
    output: Optional[str] = None

    def __post_init__(self):
        self.atoms = tuple((float(z), float(lam)) for z, lam in self.atoms)
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.utility_kind not in ("power", "exponential"):
            raise ValidationError(f"utility kind must be power, log or exponential, got {self.utility_kind!r}")
        if self.utility_kind == "exponential" and self.alpha is None:
            raise ValidationError("exponential utility needs alpha")
        if self.claim_kind not in ("put", "call"):
            raise ValidationError(f"claim kind must be put or call, got {self.claim_kind!r}")
        if self.mode == "drift-given":
            if (self.mu is None) == (self.mu_tilde is None):
                raise ValidationError("give exactly one of mu and mu_tilde")
            if self.pi_star is not None:
                raise ValidationError("pi_star is only used in implied-drift mode")
        else:
            if self.pi_star is None:
                raise ValidationError("implied-drift mode needs pi_star")
            if self.mu is not None or self.mu_tilde is not None:
                raise ValidationError("implied-drift mode takes the drift from pi_star; remove mu/mu_tilde")
        unknown = set(self.grid) - set(GRID_KEYS)
        if unknown:
            raise ValidationError(f"unknown grid keys: {', '.join(sorted(unknown))}")
        validate_market(self._market_sans_mu())
        validate_utility(self.utility())
        validate_claim(self.claim())
        if not self.spot > 0:
            raise ValidationError("spot must be > 0")

    def jumps(self) -> JumpMeasure:
        return JumpMeasure(tuple(JumpAtom(z, lam) for z, lam in self.atoms))

    def _market_sans_mu(self) -> MarketParams:
        return MarketParams(0.0, self.sigma, self.rate, self.jumps())

    def utility(self):
        return Power(self.beta) if self.utility_kind == "power" else Exponential(self.alpha)

    def claim(self) -> ClaimSpec:
        return ClaimSpec(Put(self.strike) if self.claim_kind == "put" else Call(self.strike), self.maturity)

    def target_investment(self):
        if self.utility_kind == "power":
            return Fraction(self.pi_star)
        return Amount.from_position(self.pi_star, self.alpha)

    def market(self) -> MarketParams:
        base = self._market_sans_mu()
        if self.mode == "implied-drift":
            return base.with_mu(implied_drift(self.target_investment(), base, self.utility()))
        if self.mu is not None:
            return base.with_mu(self.mu)
        return MarketParams.from_average_drift(self.mu_tilde, self.sigma, self.rate, base.jumps)

    def investment(self):
        if self.mode == "implied-drift":
            return self.target_investment()
        return optimal_investment(self.market(), self.utility())

    def pricing_method(self, method: Optional[str] = None):
        method = method or self.method
        if method == "merton":
            return Merton()
        if method == "minvar":
            return MinimalVariance()
        if method == "utility":
            return MarginalUtility(self.utility(), self.investment())
        raise ValidationError(f"method must be one of {', '.join(METHODS)}, got {method!r}")

    def measure(self, method: Optional[str] = None) -> PricingMeasure:
        return pricing_measure(self.market(), self.pricing_method(method))

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        market = {"sigma": repr(self.sigma), "rate": repr(self.rate), "spot": repr(self.spot)}
        if self.mu is not None:
            market["mu"] = repr(self.mu)
        if self.mu_tilde is not None:
            market["mu_tilde"] = repr(self.mu_tilde)
        market["atoms"] = ", ".join(f"{z!r}:{lam!r}" for z, lam in self.atoms)
        cp["market"] = market
        util = {"kind": self.utility_kind, "beta": repr(self.beta)}
        if self.alpha is not None:
            util["alpha"] = repr(self.alpha)
        cp["utility"] = util
        cp["claim"] = {"kind": self.claim_kind, "strike": repr(self.strike), "maturity": repr(self.maturity)}
        pricing = {"method": self.method, "mode": self.mode}
        if self.pi_star is not None:
            pricing["pi_star"] = repr(self.pi_star)
        cp["pricing"] = pricing
        if self.grid:
            cp["grid"] = {k: repr(v) for k, v in sorted(self.grid.items())}
        if self.output is not None:
            cp["output"] = {"path": self.output}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _float(section, key, default=None) -> Optional[float]:
    raw = section.get(key) if section is not None else None
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"{key} = {raw!r} is not a number") from None


def _pairs(raw: str, key: str) -> list[tuple[float, float]]:
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = (float(v) for v in item.split(":"))
        except ValueError:
            raise ValidationError(f"{key}: expected 'size:intensity', got {item!r}") from None
        out.append((a, b))
    return out


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed config: {str(exc).splitlines()[0]}") from None
    known = {"market", "utility", "claim", "pricing", "grid", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ValidationError(f"unknown config sections: {', '.join(sorted(extra))}")
    if not cp.has_section("market"):
        raise ValidationError("config needs a [market] section")
    m = cp["market"]
    sigma = _float(m, "sigma")
    if sigma is None:
        raise ValidationError("market.sigma is required")
    if "atoms" in m and "relative_jumps" in m:
        raise ValidationError("give jumps as atoms or relative_jumps, not both")
    atoms = _pairs(m.get("atoms", ""), "atoms")
    for jt, lam in _pairs(m.get("relative_jumps", ""), "relative_jumps"):
        if jt <= -1.0:
            raise ValidationError(f"relative jump {jt} must exceed -1")
        atoms.append((math.log1p(jt), lam))

    u = cp["utility"] if cp.has_section("utility") else None
    kind = (u.get("kind", "power") if u is not None else "power").strip().lower()
    beta = _float(u, "beta", 1.0)
    if kind == "log":
        kind, beta = "power", 1.0
    c = cp["claim"] if cp.has_section("claim") else None
    p = cp["pricing"] if cp.has_section("pricing") else None
    grid = {}
    if cp.has_section("grid"):
        for key, raw in cp["grid"].items():
            if key not in GRID_KEYS:
                raise ValidationError(f"unknown grid key {key!r}")
            try:
                grid[key] = GRID_KEYS[key](float(raw)) if GRID_KEYS[key] is int else float(raw)
            except ValueError:
                raise ValidationError(f"grid.{key} = {raw!r} is not a number") from None
    output = cp["output"].get("path") if cp.has_section("output") else None
    return RunConfig(
        sigma=sigma,
        atoms=tuple(atoms),
        mu=_float(m, "mu"),
        mu_tilde=_float(m, "mu_tilde"),
        rate=_float(m, "rate", 0.0),
        spot=_float(m, "spot", 100.0),
        utility_kind=kind,
        beta=beta,
        alpha=_float(u, "alpha"),
        claim_kind=(c.get("kind", "put") if c is not None else "put").strip().lower(),
        strike=_float(c, "strike", 100.0),
        maturity=_float(c, "maturity", 1.0),
        method=(p.get("method", "utility") if p is not None else "utility").strip().lower(),
        mode=(p.get("mode", "drift-given") if p is not None else "drift-given").strip().lower(),
        pi_star=_float(p, "pi_star"),
        grid=grid,
        output=output,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
