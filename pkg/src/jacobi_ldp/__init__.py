"""Jacobi diffusion: transition densities, path simulation, drift
estimation and large-deviation rates of the drift estimator."""
from .params import (DEFAULT_CONTROL, ConvergenceError, DomainError, JacobiParams, SeriesControl,
                     from_alpha_beta, from_bc, from_dd, from_pq)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONTROL", "ConvergenceError", "DomainError", "JacobiParams", "SeriesControl",
    "from_alpha_beta", "from_bc", "from_dd", "from_pq", "__version__",
]
