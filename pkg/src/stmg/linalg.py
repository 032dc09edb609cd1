"""Minimal dense complex linear algebra used by every other module.

Matrices are plain 2-D ``numpy.ndarray`` objects (complex128, row-major);
there is no wrapper type. The heavy kernels (LU solve, determinant,
eigenvalues) run either in the compiled extension ``stmg._kernels`` or in
the interpreted twin ``stmg._kernels_py``; the compiled one is picked at
import when present, and STMG_PURE=1 forces the interpreted one. Both
implement the same algorithms: partial-pivot LU and complex Hessenberg QR
with Wilkinson shifts.

All functions are pure; values are never mutated and are safe to share
across threads.
"""

from __future__ import annotations

import os

import numpy as np

from stmg.errors import NoConvergence, SingularMatrix

__all__ = [
    "SingularMatrix",
    "NoConvergence",
    "backend",
    "kron",
    "matmul",
    "lu_solve",
    "det",
    "eigenvalues",
    "spectral_radius",
]

if os.environ.get("STMG_PURE"):
    from stmg import _kernels_py as _impl
else:
    try:
        from stmg import _kernels as _impl
    except ImportError:
        from stmg import _kernels_py as _impl


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _impl.BACKEND


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product, size (a.rows*b.rows) x (a.cols*b.cols)."""
    a, b = _as_matrix(a), _as_matrix(b)
    out = a[:, None, :, None] * b[None, :, None, :]
    return out.reshape(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])


def matmul(a, b) -> np.ndarray:
    return np.asarray(a) @ np.asarray(b)


def lu_solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` with partial pivoting.

    ``b`` may be a vector or a matrix of stacked right-hand sides. Raises
    SingularMatrix when a pivot magnitude falls below 1e-14 times the
    largest entry magnitude of ``a``.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    return np.asarray(_impl.lu_solve(a, b))


def det(a) -> complex:
    """Determinant via the same pivoted elimination as lu_solve."""
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    return complex(_impl.det(a))


def eigenvalues(a, step_cap: int | None = None) -> np.ndarray:
    """All eigenvalues of a small dense matrix, with multiplicity.

    Complex Hessenberg QR with Wilkinson shifts. Raises NoConvergence
    after ``step_cap`` QR sweeps (default 100 * n**2).
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    return np.asarray(_impl.eigenvalues(a, step_cap))


def spectral_radius(a, step_cap: int | None = None) -> float:
    """max |lambda| over eigenvalues(a)."""
    vals = eigenvalues(a, step_cap)
    return float(np.max(np.abs(vals))) if vals.size else 0.0
