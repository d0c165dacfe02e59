"""Independent checks: a discrete-time dynamic program and a Monte Carlo estimator."""

from .lattice import IndifferenceResult, LatticeSpec, lattice_expected_utility, lattice_indifference_price, richardson
from .montecarlo import McEstimate, McSpec, mc_marginal_price, ratio_estimator

__all__ = [
    "IndifferenceResult",
    "LatticeSpec",
    "McEstimate",
    "McSpec",
    "lattice_expected_utility",
    "lattice_indifference_price",
    "mc_marginal_price",
    "ratio_estimator",
    "richardson",
]
