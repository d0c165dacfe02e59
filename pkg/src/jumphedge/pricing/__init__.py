from .analytic import black_scholes, implied_vol, poisson_weights, price_bounds, price_series_fixed_jump
from .pide import GridSpec, PIDESolution, convergence_gap, solve_pide, write_solution_csv

__all__ = [
    "GridSpec",
    "PIDESolution",
    "black_scholes",
    "convergence_gap",
    "implied_vol",
    "poisson_weights",
    "price_bounds",
    "price_series_fixed_jump",
    "solve_pide",
    "write_solution_csv",
]
