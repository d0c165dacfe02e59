"""Market model, jump measure, risk preferences and claims.

The jump measure is a finite list of atoms ``(z, intensity)`` where ``z`` is
the log jump size and ``intensity`` its frequency per year.  Continuous jump
densities have to be discretized by the caller before they reach this module.

All objects are frozen dataclasses; use :func:`validate_market` to check a
market before handing it to a solver (the solvers do this themselves).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class JumpAtom:
    z: float
    intensity: float

    @property
    def relative_size(self) -> float:
        """Relative price change ``e^z - 1`` caused by the jump."""
        return math.expm1(self.z)


@dataclass(frozen=True)
class JumpMeasure:
    atoms: tuple[JumpAtom, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "atoms", tuple(a if isinstance(a, JumpAtom) else JumpAtom(*a) for a in self.atoms)
        )

    @classmethod
    def single(cls, relative_size: float, intensity: float) -> "JumpMeasure":
        """One atom given by its relative size ``e^z - 1`` (e.g. -0.25)."""
        return cls((JumpAtom(math.log1p(relative_size), intensity),))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def z(self) -> np.ndarray:
        return np.array([a.z for a in self.atoms], dtype=float)

    @property
    def intensities(self) -> np.ndarray:
        return np.array([a.intensity for a in self.atoms], dtype=float)

    @property
    def relative_sizes(self) -> np.ndarray:
        return np.expm1(self.z)

    @property
    def total_intensity(self) -> float:
        return float(self.intensities.sum()) if self.atoms else 0.0

    def scaled(self, factor: float) -> "JumpMeasure":
        return JumpMeasure(tuple(JumpAtom(a.z, a.intensity * factor) for a in self.atoms))


@dataclass(frozen=True)
class MarketParams:
    """Real-world jump diffusion ``dS = mu S dt + sigma S dW + (e^J - 1) S dN``."""

    mu: float
    sigma: float
    rate: float = 0.0
    jumps: JumpMeasure = field(default_factory=JumpMeasure)

    @classmethod
    def from_average_drift(
        cls, mu_tilde: float, sigma: float, rate: float = 0.0, jumps: Optional[JumpMeasure] = None
    ) -> "MarketParams":
        """Build a market from the average drift ``mu + sum (e^z - 1) intensity``."""
        jumps = jumps if jumps is not None else JumpMeasure()
        return cls(mu=mu_tilde - jump_moment(jumps, 1), sigma=sigma, rate=rate, jumps=jumps)

    @property
    def mu_tilde(self) -> float:
        """Average drift including the expected jump contribution."""
        return self.mu + jump_moment(self.jumps, 1)

    def with_mu(self, mu: float) -> "MarketParams":
        return replace(self, mu=mu)

    def without_jumps(self) -> "MarketParams":
        return replace(self, jumps=JumpMeasure())


@dataclass(frozen=True)
class Power:
    """Constant relative risk aversion ``U(x) = x**(1-beta)/(1-beta)``; log utility at beta=1."""

    beta: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.beta == 1.0:
            return np.log(x)
        return x ** (1.0 - self.beta) / (1.0 - self.beta)

    def marginal(self, x):
        return np.asarray(x, dtype=float) ** (-self.beta)

    def log_marginal(self, x):
        return -self.beta * np.log(x)


@dataclass(frozen=True)
class Exponential:
    """Constant absolute risk aversion ``U(x) = -exp(-alpha x)`` (the scale constant is dropped)."""

    alpha: float

    def __call__(self, x):
        return -np.exp(-self.alpha * np.asarray(x, dtype=float))

    def marginal(self, x):
        return self.alpha * np.exp(-self.alpha * np.asarray(x, dtype=float))

    def log_marginal(self, x):
        return math.log(self.alpha) - self.alpha * np.asarray(x, dtype=float)


UtilitySpec = Union[Power, Exponential]


def validate_utility(utility: UtilitySpec) -> UtilitySpec:
    if isinstance(utility, Power):
        if not (math.isfinite(utility.beta) and utility.beta >= 1.0):
            raise ValidationError(f"power utility needs beta >= 1, got {utility.beta}")
    elif isinstance(utility, Exponential):
        if not (math.isfinite(utility.alpha) and utility.alpha > 0.0):
            raise ValidationError(f"exponential utility needs alpha > 0, got {utility.alpha}")
    else:
        raise ValidationError(f"unknown utility {utility!r}")
    return utility


@dataclass(frozen=True)
class Put:
    strike: float

    def payoff(self, s):
        return np.maximum(self.strike - np.asarray(s, dtype=float), 0.0)


@dataclass(frozen=True)
class Call:
    strike: float

    def payoff(self, s):
        return np.maximum(np.asarray(s, dtype=float) - self.strike, 0.0)


@dataclass(frozen=True)
class Custom:
    """Tabulated payoff, linearly interpolated and extended linearly past the table."""

    s: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def constant(cls, value: float) -> "Custom":
        return cls((1.0, 2.0), (value, value))

    def payoff(self, s):
        s = np.asarray(s, dtype=float)
        xs = np.asarray(self.s)
        ys = np.asarray(self.values)
        out = np.interp(s, xs, ys)
        lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(s < xs[0], ys[0] + lo_slope * (s - xs[0]), out)
        out = np.where(s > xs[-1], ys[-1] + hi_slope * (s - xs[-1]), out)
        return out


ClaimKind = Union[Put, Call, Custom]


@dataclass(frozen=True)
class ClaimSpec:
    kind: ClaimKind
    maturity: float

    def payoff(self, s):
        return self.kind.payoff(s)

    @property
    def strike(self) -> Optional[float]:
        return getattr(self.kind, "strike", None)

    @property
    def is_vanilla(self) -> bool:
        return isinstance(self.kind, (Put, Call))


def validate_claim(claim: ClaimSpec) -> ClaimSpec:
    if not (math.isfinite(claim.maturity) and claim.maturity > 0):
        raise ValidationError(f"maturity must be > 0, got {claim.maturity}")
    kind = claim.kind
    if isinstance(kind, (Put, Call)):
        if not (math.isfinite(kind.strike) and kind.strike > 0):
            raise ValidationError(f"strike must be > 0, got {kind.strike}")
    elif isinstance(kind, Custom):
        xs = np.asarray(kind.s)
        ys = np.asarray(kind.values)
        if len(xs) < 2 or len(xs) != len(ys):
            raise ValidationError("custom payoff needs at least two (s, payoff) pairs of equal length")
        if np.any(np.diff(xs) <= 0) or xs[0] <= 0:
            raise ValidationError("custom payoff abscissae must be positive and strictly increasing")
        if not np.all(np.isfinite(ys)):
            raise ValidationError("custom payoff values must be finite")
    else:
        raise ValidationError(f"unknown claim kind {kind!r}")
    return claim


def validate_market(params: MarketParams) -> MarketParams:
    """Return ``params`` unchanged if every invariant holds, else raise ValidationError."""
    if not math.isfinite(params.mu):
        raise ValidationError("mu must be finite")
    if not (math.isfinite(params.sigma) and params.sigma > 0):
        raise ValidationError(f"sigma must be > 0, got {params.sigma}")
    if not math.isfinite(params.rate):
        raise ValidationError("rate must be finite")
    for atom in params.jumps.atoms:
        if not math.isfinite(atom.z):
            raise ValidationError(f"jump atom z={atom.z} is not finite")
        if atom.z == 0.0 or math.expm1(atom.z) == 0.0:
            raise ValidationError("jump atom z=0 is a no-op jump")
        if not (math.isfinite(atom.intensity) and atom.intensity > 0):
            raise ValidationError(f"jump atom intensity must be > 0, got {atom.intensity}")
    return params


def jump_moment(jumps: JumpMeasure, k: int, weights: Optional[Sequence[float]] = None) -> float:
    """``sum_i w_i (e^{z_i} - 1)^k intensity_i``."""
    if k < 1 or int(k) != k:
        raise ValueError(f"k must be a positive integer, got {k}")
    if not jumps.atoms:
        if weights is not None and len(weights) != 0:
            raise ValueError("weights length does not match the number of atoms")
        return 0.0
    terms = jumps.relative_sizes ** int(k) * jumps.intensities
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != terms.shape:
            raise ValueError(
                f"weights length {w.size} does not match the number of atoms {terms.size}"
            )
        terms = terms * w
    return float(terms.sum())
