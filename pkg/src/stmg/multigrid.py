"""Damped block Jacobi smoother, transfer operators, two-grid cycle.

The smoother's blocks are whole space-time slabs; one sweep factors the
shared diagonal block once and updates every slab from the pre-sweep
residual, so slabs can be processed in any order (or concurrently) with
bitwise-identical results. Coarse systems are rebuilt on the coarse mesh
(2*dt, and 2*dx under full coarsening), never Galerkin-projected, and are
solved exactly by forward substitution over the slabs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse.linalg as spla

from stmg import quadrature
from stmg.errors import Diverged, OddDimension, SingularMatrix
from stmg.operators import SpaceTimeSystem

__all__ = [
    "TimeTransfer",
    "SpaceTransfer",
    "MgConfig",
    "OddDimension",
    "Diverged",
    "build_time_transfer",
    "build_space_transfer",
    "block_jacobi_sweep",
    "restrict",
    "prolong",
    "sequential_solve",
    "two_grid_cycle",
    "iterate_two_grid",
    "measure_rate",
]

RESIDUAL_FLOOR = 1e-14  # relative; guards the rate formula against stagnation noise
DIVERGENCE_GUARD = 10.0


@dataclass(frozen=True)
class TimeTransfer:
    """Local restriction blocks; prolongation blocks are their transposes.

    Coarse slab c collects R1 @ (fine slab 2c) + R2 @ (fine slab 2c+1);
    R1, R2 come from the cross-mass integrals of the two fine children
    against the coarse basis, scaled by the inverse diagonal mass.
    """

    p_t: int
    R1: np.ndarray
    R2: np.ndarray


@dataclass(frozen=True)
class SpaceTransfer:
    """Per-direction spatial pair: restriction averages in the L2 sense,
    prolongation re-expands the coarse polynomial on both children.

    For p_x = 0 this is exactly cell agglomeration: R blocks are 1/2,
    P blocks are 1, and P = (2 R)^T holds entrywise.
    """

    p_x: int
    R1: np.ndarray
    R2: np.ndarray
    P1: np.ndarray
    P2: np.ndarray


@dataclass(frozen=True)
class MgConfig:
    omega_t: float = 0.5
    nu1: int = 1
    nu2: int = 1
    strategy: str = "semi"
    coarse_solver: str = "exact"

    def __post_init__(self):
        if not 0.0 < self.omega_t <= 1.0:
            raise ValueError("omega_t must lie in (0, 1]")
        if self.nu1 + self.nu2 < 1:
            raise ValueError("need at least one smoothing sweep")
        if self.strategy not in ("semi", "full"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.coarse_solver != "exact":
            raise ValueError("only the exact sequential coarse solver is implemented")


@lru_cache(maxsize=None)
def build_time_transfer(p_t: int) -> TimeTransfer:
    """Cross-mass transfer blocks between a slab pair and their union.

    Integrals are evaluated with a Gauss rule exact for degree 2*p_t. The
    blocks are independent of dt (the mass scaling cancels), so the unit
    pair (0,1), (1,2) against the coarse element (0,2) is assembled.
    """
    n = p_t + 1
    rule = quadrature.lgl_rule(n)
    fine_nodes = (rule.nodes + 1.0) / 2.0  # on (0, 1)
    coarse_nodes = rule.nodes + 1.0  # on (0, 2)
    gx, gw = quadrature.gauss_rule(p_t + 1)
    t1 = (gx + 1.0) / 2.0  # quadrature points in (0, 1)
    fine_at = quadrature.lagrange_eval_matrix(fine_nodes, t1)  # (q, n)
    m1 = 0.5 * fine_at.T @ (gw[:, None] * quadrature.lagrange_eval_matrix(coarse_nodes, t1))
    m2 = 0.5 * fine_at.T @ (gw[:, None] * quadrature.lagrange_eval_matrix(coarse_nodes, t1 + 1.0))
    m_inv = 1.0 / (rule.weights / 2.0)
    r1 = (m_inv[:, None] * m1).T
    r2 = (m_inv[:, None] * m2).T
    return TimeTransfer(p_t, r1, r2)


@lru_cache(maxsize=None)
def build_space_transfer(p_x: int) -> SpaceTransfer:
    """Cell-pair transfer on the reference element.

    Children of the coarse element [-1,1] are [-1,0] and [0,1];
    prolongation evaluates the coarse polynomial at the mapped child
    nodes, restriction is the L2 projection back (exact coarse mass).
    """
    n = p_x + 1
    rule = quadrature.lgl_rule(n)
    maps = [(rule.nodes - 1.0) / 2.0, (rule.nodes + 1.0) / 2.0]
    p1, p2 = (quadrature.lagrange_eval_matrix(rule.nodes, m) for m in maps)
    gx, gw = quadrature.gauss_rule(n + 1)
    basis = quadrature.lagrange_eval_matrix(rule.nodes, gx)  # (q, n)
    mc = basis.T @ (gw[:, None] * basis)
    cross = []
    for child in ((gx - 1.0) / 2.0, (gx + 1.0) / 2.0):
        coarse_at = quadrature.lagrange_eval_matrix(rule.nodes, child)
        cross.append(0.5 * coarse_at.T @ (gw[:, None] * basis))
    r1 = np.linalg.solve(mc, cross[0])
    r2 = np.linalg.solve(mc, cross[1])
    return SpaceTransfer(p_x, r1, r2, p1, p2)


def _slab_lu(sys: SpaceTimeSystem):
    if sys._slab_lu is None:
        try:
            object.__setattr__(sys, "_slab_lu", spla.splu(sys.A.tocsc()))
        except (RuntimeError, ValueError) as exc:
            raise SingularMatrix(f"slab block is singular: {exc}") from exc
    return sys._slab_lu


def block_jacobi_sweep(sys: SpaceTimeSystem, u: np.ndarray, b: np.ndarray, omega_t: float) -> np.ndarray:
    """One damped sweep: u + omega * D^{-1} (b - L u), D = diag(A, ..., A).

    All slab updates read the pre-sweep residual, so they are mutually
    independent.
    """
    lu = _slab_lu(sys)
    r = sys.residual(b, u).reshape(sys.N, -1)
    out = sys.slabs(np.array(u, dtype=float, copy=True))
    for s in range(sys.N):
        out[s] += omega_t * lu.solve(r[s])
    return out.reshape(-1)


def _pair_time(v: np.ndarray, n_slabs: int, tt: TimeTransfer, nt: int) -> np.ndarray:
    pairs = v.reshape(n_slabs // 2, 2, -1, nt)
    return np.einsum("ab,cxb->cxa", tt.R1, pairs[:, 0]) + np.einsum("ab,cxb->cxa", tt.R2, pairs[:, 1])


def _unpair_time(v: np.ndarray, n_coarse: int, tt: TimeTransfer, nt: int) -> np.ndarray:
    vc = v.reshape(n_coarse, -1, nt)
    out = np.empty((n_coarse, 2, vc.shape[1], nt))
    out[:, 0] = np.einsum("ab,cxb->cxa", tt.R1.T, vc)
    out[:, 1] = np.einsum("ab,cxb->cxa", tt.R2.T, vc)
    return out


def _pair_cells(v: np.ndarray, b1: np.ndarray, b2: np.ndarray, n_cells: int, nodes: int, axis_len_after: int) -> np.ndarray:
    """Contract a (.., n_cells*nodes, after) axis pair-of-cells-wise."""
    shaped = v.reshape(-1, n_cells // 2, 2, nodes, axis_len_after)
    return (np.einsum("ab,kcbt->kcat", b1, shaped[:, :, 0])
            + np.einsum("ab,kcbt->kcat", b2, shaped[:, :, 1]))


def _unpair_cells(v: np.ndarray, b1: np.ndarray, b2: np.ndarray, n_coarse_cells: int, nodes: int, axis_len_after: int) -> np.ndarray:
    shaped = v.reshape(-1, n_coarse_cells, nodes, axis_len_after)
    out = np.empty((shaped.shape[0], n_coarse_cells, 2, nodes, axis_len_after))
    out[:, :, 0] = np.einsum("ab,kcbt->kcat", b1, shaped)
    out[:, :, 1] = np.einsum("ab,kcbt->kcat", b2, shaped)
    return out


def restrict(strategy: str, v: np.ndarray, fine: SpaceTimeSystem, coarse: SpaceTimeSystem) -> np.ndarray:
    """Transfer a fine residual to the coarse grid.

    semi coarsens slab pairs only; full also agglomerates cell pairs in
    every spatial direction.
    """
    if fine.N % 2:
        raise OddDimension(f"cannot pair {fine.N} slabs")
    nt = fine.n_t
    tt = build_time_transfer(fine.t_ops.p_t)
    w = _pair_time(np.asarray(v), fine.N, tt, nt)  # (N/2, nsp, nt)
    if strategy == "semi":
        return w.reshape(-1)
    s_ops = fine.s_ops
    if s_ops.N_x % 2:
        raise OddDimension(f"cannot pair {s_ops.N_x} cells")
    st = build_space_transfer(s_ops.p_x)
    nodes = s_ops.p_x + 1
    half = fine.N // 2
    if s_ops.dims == 1:
        w = _pair_cells(w.reshape(half, s_ops.N_x * nodes, nt), st.R1, st.R2, s_ops.N_x, nodes, nt)
        return w.reshape(-1)
    n1 = s_ops.N_x * nodes
    # x direction: expose (ydof, xcells*nodes, nt)
    w = _pair_cells(w.reshape(half * n1, n1, nt), st.R1, st.R2, s_ops.N_x, nodes, nt)
    w = w.reshape(half, n1, (n1 // 2) * nt)
    # y direction
    w = _pair_cells(w, st.R1, st.R2, s_ops.N_x, nodes, (n1 // 2) * nt)
    return w.reshape(-1)


def prolong(strategy: str, v: np.ndarray, fine: SpaceTimeSystem, coarse: SpaceTimeSystem) -> np.ndarray:
    """Transfer a coarse correction back to the fine grid."""
    nt = fine.n_t
    tt = build_time_transfer(fine.t_ops.p_t)
    half = fine.N // 2
    s_ops = fine.s_ops
    if strategy == "semi":
        out = _unpair_time(np.asarray(v), half, tt, nt)
        return out.reshape(-1)
    st = build_space_transfer(s_ops.p_x)
    nodes = s_ops.p_x + 1
    nc = s_ops.N_x // 2
    if s_ops.dims == 1:
        w = _unpair_cells(np.asarray(v).reshape(half, nc * nodes, nt), st.P1, st.P2, nc, nodes, nt)
        w = w.reshape(half, s_ops.N_x * nodes * nt)
    else:
        n1c = nc * nodes
        n1 = s_ops.N_x * nodes
        # y direction first (outer axis), then x
        w = _unpair_cells(np.asarray(v).reshape(half, n1c, n1c * nt), st.P1, st.P2, nc, nodes, n1c * nt)
        w = w.reshape(half * n1, n1c, nt)
        w = _unpair_cells(w, st.P1, st.P2, nc, nodes, nt)
        w = w.reshape(half, n1 * n1 * nt)
    out = _unpair_time(w, half, tt, nt)
    return out.reshape(-1)


def sequential_solve(sys: SpaceTimeSystem, b: np.ndarray) -> np.ndarray:
    """Exact solve by forward substitution over the slabs."""
    if sys.periodic_in_time:
        raise ValueError("sequential solve needs a non-periodic system")
    lu = _slab_lu(sys)
    bb = sys.slabs(np.asarray(b, dtype=float))
    u = np.empty_like(bb)
    for s in range(sys.N):
        rhs = bb[s] if s == 0 else bb[s] - sys.apply_B(u[s - 1])
        u[s] = lu.solve(rhs)
    return u.reshape(-1)


def two_grid_cycle(
    fine: SpaceTimeSystem,
    coarse: SpaceTimeSystem,
    u: np.ndarray,
    b: np.ndarray,
    cfg: MgConfig,
) -> np.ndarray:
    """One V-cycle: nu1 sweeps, exact coarse correction, nu2 sweeps."""
    if coarse.N * 2 != fine.N:
        raise ValueError("coarse system must have half the slabs")
    u = np.asarray(u, dtype=float)
    for _ in range(cfg.nu1):
        u = block_jacobi_sweep(fine, u, b, cfg.omega_t)
    r = fine.residual(b, u)
    e = sequential_solve(coarse, restrict(cfg.strategy, r, fine, coarse))
    u = u + prolong(cfg.strategy, e, fine, coarse)
    for _ in range(cfg.nu2):
        u = block_jacobi_sweep(fine, u, b, cfg.omega_t)
    return u


def iterate_two_grid(
    fine: SpaceTimeSystem,
    coarse: SpaceTimeSystem,
    b: np.ndarray,
    cfg: MgConfig,
    iters: int = 60,
) -> list[float]:
    """Euclidean residual norms [r0, r1, ...] from a zero initial guess.

    Stops early once the residual falls below RESIDUAL_FLOOR relative to
    the initial one.
    """
    u = np.zeros(fine.n_unknowns)
    norms = [float(np.linalg.norm(fine.residual(b, u)))]
    for _ in range(iters):
        u = two_grid_cycle(fine, coarse, u, b, cfg)
        norms.append(float(np.linalg.norm(fine.residual(b, u))))
        if norms[-1] < RESIDUAL_FLOOR * norms[0]:
            break
    return norms


def rate_from_residuals(norms: list[float]) -> float:
    """max over i >= 1 of r_{i+1}/r_i; 0 when no such ratio was computed.

    The i = 0 ratio (first iterate against the initial residual) is
    excluded from the maximum but still guarded against divergence.
    """
    ratios = []
    for i in range(len(norms) - 1):
        if norms[i] == 0.0:
            break
        q = norms[i + 1] / norms[i]
        if q > DIVERGENCE_GUARD:
            raise Diverged(f"residual ratio {q:.2f} at iteration {i + 1}")
        if i >= 1:
            ratios.append(q)
    return max(ratios) if ratios else 0.0


def measure_rate(
    fine: SpaceTimeSystem,
    coarse: SpaceTimeSystem,
    b: np.ndarray,
    cfg: MgConfig,
    iters: int = 60,
) -> float:
    return rate_from_residuals(iterate_two_grid(fine, coarse, b, cfg, iters))
