"""Space-time multigrid for linear advection, with a Fourier-mode
analysis engine that predicts smoothing and two-grid convergence factors
and cross-validates them against directly assembled matrices."""

__version__ = "0.1.0"

from stmg.linalg import backend  # noqa: F401
