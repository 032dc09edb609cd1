"""Element operators and the block space-time system.

Unknown ordering is fixed everywhere as slab-major, then spatial dof, then
time node: flat index ((slab * n_space) + dof) * n_t + node. Spatial dofs
are cell-major with nodes innermost; in 2D the y direction is outermost,
so dof = (iy*(p+1)+my) * Nx*(p+1) + ix*(p+1)+mx. Transfer operators and
the Fourier-transform checks depend on this convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from stmg import quadrature
from stmg.errors import InconsistentData

__all__ = [
    "TemporalOps",
    "SpatialOps",
    "DgSemSpatialOps",
    "SpaceTimeSystem",
    "InconsistentData",
    "temporal_operators",
    "spatial_fv_operator",
    "spatial_dgsem_operator",
    "assemble_system",
]


@dataclass(frozen=True)
class TemporalOps:
    """Per-element matrices of the nodal upwind discretization in time.

    M_tau is the diagonal (collocation) mass matrix (dt/2) diag(w);
    D_tau is the scaled differentiation matrix (2/dt) l'_j(tau_i);
    K_tau = E - D_tau^T M_tau is dt-independent; C_tau couples the last
    node of the previous element into the first equation; E picks the
    last node.
    """

    p_t: int
    dt: float
    M_tau: np.ndarray
    K_tau: np.ndarray
    C_tau: np.ndarray
    E: np.ndarray
    D_tau: np.ndarray
    rule: quadrature.LglRule

    @property
    def n_t(self) -> int:
        return self.p_t + 1


def temporal_operators(p_t: int, dt: float) -> TemporalOps:
    if p_t < 0 or dt <= 0:
        raise ValueError("need p_t >= 0 and dt > 0")
    n = p_t + 1
    rule = quadrature.lgl_rule(n)
    m = np.diag(rule.weights) * (dt / 2.0)
    d = quadrature.lagrange_derivative_matrix(rule) * (2.0 / dt)
    e = np.zeros((n, n))
    e[-1, -1] = 1.0
    c = np.zeros((n, n))
    c[0, -1] = 1.0
    k = e - d.T @ m
    return TemporalOps(p_t, float(dt), m, k, c, e, d, rule)


def _dg_cell_blocks(p_x: int, dx: float, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and left-neighbor blocks of the 1D upwind operator.

    Mass-divided form, so the p_x=0 blocks are exactly a/dx and -a/dx.
    The left-neighbor block only reads the neighbor's last node (upwind
    trace), which is what makes inflow data enter through a single value.
    """
    n = p_x + 1
    rule = quadrature.lgl_rule(n)
    w_inv = np.diag(1.0 / rule.weights)
    d_ref = quadrature.lagrange_derivative_matrix(rule)
    e_right = np.zeros((n, n))
    e_right[-1, -1] = 1.0
    c_ref = np.zeros((n, n))
    c_ref[0, -1] = 1.0
    scale = 2.0 * a / dx
    diag = scale * w_inv @ (e_right - d_ref.T @ np.diag(rule.weights))
    sub = -scale * w_inv @ c_ref
    return diag, sub


def _chain_matrix(n_cells: int, diag: np.ndarray, sub: np.ndarray, periodic: bool) -> sp.csr_matrix:
    """Block lower-bidiagonal cell chain, with a wrap block when periodic."""
    eye = sp.identity(n_cells, format="csr")
    shift = sp.lil_matrix((n_cells, n_cells))
    for j in range(1, n_cells):
        shift[j, j - 1] = 1.0
    if periodic:
        shift[0, n_cells - 1] = 1.0
    return (sp.kron(eye, diag) + sp.kron(shift.tocsr(), sub)).tocsr()


@dataclass(frozen=True)
class SpatialOps:
    """First-order upwind operator on N_x cells (one value per cell)."""

    N_x: int
    dx: float
    a: float
    boundary: str
    K_xi: sp.csr_matrix

    # uniform duck-type fields shared with DgSemSpatialOps
    dims: int = 1
    p_x: int = 0

    @property
    def matrix(self) -> sp.csr_matrix:
        return self.K_xi

    @property
    def n_dofs(self) -> int:
        return self.N_x

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.N_x,)

    @property
    def coords(self) -> tuple[np.ndarray, ...]:
        return ((np.arange(self.N_x) + 0.5) * self.dx,)

    @property
    def node_weights(self) -> np.ndarray:
        return np.array([2.0])

    @property
    def sub_col(self) -> np.ndarray:
        return np.array([-self.a / self.dx])


def spatial_fv_operator(N_x: int, dx: float, a: float, boundary: str = "periodic") -> SpatialOps:
    """Upwind flux, flow left to right: a/dx on the diagonal, -a/dx below.

    Periodic grids carry the wrap entry in the corner; inflow grids drop
    it and the inflow data enters the right-hand side instead.
    """
    if N_x < 2 or dx <= 0 or a <= 0:
        raise ValueError("need N_x >= 2, dx > 0, a > 0")
    if boundary not in ("periodic", "inflow"):
        raise ValueError(f"unknown boundary {boundary!r}")
    diag = np.array([[a / dx]])
    sub = np.array([[-a / dx]])
    k = _chain_matrix(N_x, diag, sub, boundary == "periodic")
    return SpatialOps(N_x, float(dx), float(a), boundary, k)


@dataclass(frozen=True)
class DgSemSpatialOps:
    """Nodal upwind advection operator of degree p_x, in 1 or 2 dimensions.

    2D grids are tensor products of the 1D operator with speed 1 in each
    direction. ``matrix`` covers all spatial dofs of one time level.
    """

    p_x: int
    dims: int
    N_x: int
    dx: float
    a: float
    boundary: str
    matrix: sp.csr_matrix
    rule: quadrature.LglRule
    sub_col: np.ndarray  # left-neighbor block action on the upwind trace

    @property
    def n_dofs(self) -> int:
        return (self.N_x * (self.p_x + 1)) ** self.dims

    @property
    def cells(self) -> tuple[int, ...]:
        return (self.N_x,) * self.dims

    @property
    def coords(self) -> tuple[np.ndarray, ...]:
        nodes = (self.rule.nodes + 1.0) / 2.0
        line = (np.arange(self.N_x)[:, None] + nodes[None, :]).ravel() * self.dx
        return (line,) * self.dims

    @property
    def node_weights(self) -> np.ndarray:
        return self.rule.weights


def spatial_dgsem_operator(
    p_x: int,
    N_x: int,
    dx: float,
    a: float = 1.0,
    dims: int = 1,
    boundary: str = "periodic",
) -> DgSemSpatialOps:
    """Weak-form upwind advection with collocated quadrature.

    p_x = 0 reproduces spatial_fv_operator entry for entry. In 2D the
    advection speed is (a, a) and the grid is N_x by N_x.
    """
    if p_x < 0 or dims not in (1, 2):
        raise ValueError("need p_x >= 0 and dims in {1, 2}")
    if boundary not in ("periodic", "inflow"):
        raise ValueError(f"unknown boundary {boundary!r}")
    diag, sub = _dg_cell_blocks(p_x, dx, a)
    periodic = boundary == "periodic"
    k1 = _chain_matrix(N_x, diag, sub, periodic)
    if dims == 1:
        k = k1
    else:
        n1 = N_x * (p_x + 1)
        eye = sp.identity(n1, format="csr")
        k = (sp.kron(k1, eye) + sp.kron(eye, k1)).tocsr()
    rule = quadrature.lgl_rule(p_x + 1)
    return DgSemSpatialOps(p_x, dims, N_x, float(dx), float(a), boundary, k, rule, sub[:, -1].copy())


@dataclass
class SpaceTimeSystem:
    """Block lower-bidiagonal operator over N slabs.

    The diagonal block A couples all spatial dofs of one slab; the
    subdiagonal block B feeds each dof's last time node into the next
    slab. periodic_in_time adds B in the top-right corner.
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    N: int
    periodic_in_time: bool
    rhs: np.ndarray
    t_ops: TemporalOps
    s_ops: SpatialOps | DgSemSpatialOps
    _slab_lu: object = field(default=None, repr=False)

    @property
    def n_t(self) -> int:
        return self.t_ops.n_t

    @property
    def n_space(self) -> int:
        return self.s_ops.n_dofs

    @property
    def n_unknowns(self) -> int:
        return self.N * self.n_space * self.n_t

    def slabs(self, u: np.ndarray) -> np.ndarray:
        return u.reshape(self.N, self.n_space * self.n_t)

    def apply_B(self, u_slab: np.ndarray) -> np.ndarray:
        """B u for one slab, via the last-node/first-node coupling."""
        out = np.zeros_like(u_slab)
        blk = u_slab.reshape(self.n_space, self.n_t)
        out.reshape(self.n_space, self.n_t)[:, 0] = -blk[:, -1]
        return out

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Full operator: slab s gets A u^s + B u^{s-1} (wrapping if periodic)."""
        uu = self.slabs(np.asarray(u))
        out = np.empty_like(uu)
        for s in range(self.N):
            out[s] = self.A @ uu[s]
            if s > 0:
                out[s] += self.apply_B(uu[s - 1])
            elif self.periodic_in_time:
                out[s] += self.apply_B(uu[self.N - 1])
        return out.reshape(-1)

    def residual(self, b: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.asarray(b) - self.apply(u)


def _inflow_rhs(t_ops: TemporalOps, s_ops, n_slabs: int, exact: Callable) -> np.ndarray:
    """Boundary terms of the upwind flux, moved to the right-hand side.

    Each inflow-layer cell sees its missing left neighbor only through the
    upwind trace, so the contribution per face node is
    -sub_col[m] * M_tau[k,k] * g(face, t_k).
    """
    nt = t_ops.n_t
    nsp = s_ops.n_dofs
    b = np.zeros((n_slabs, nsp, nt))
    t_nodes = (np.arange(n_slabs)[:, None] + (t_ops.rule.nodes[None, :] + 1.0) / 2.0) * t_ops.dt
    m_diag = np.diag(t_ops.M_tau)
    sub_col = s_ops.sub_col
    n = len(sub_col)
    if s_ops.dims == 1:
        g = exact(0.0, t_nodes)  # (N, nt)
        contrib = -sub_col[None, :, None] * m_diag[None, None, :] * g[:, None, :]
        b[:, :n, :] += contrib
        return b.reshape(-1)
    line = s_ops.coords[0]
    n1 = len(line)
    view = b.reshape(n_slabs, n1, n1, nt)  # (slab, ydof, xdof, node)
    # x = 0 face: cells ix = 0, trace g(0, y, t), one value per (slab, ydof, node)
    gx = np.broadcast_to(exact(0.0, line[None, :, None], t_nodes[:, None, :]), (n_slabs, n1, nt))
    view[:, :, :n, :] += -sub_col[None, None, :, None] * m_diag[None, None, None, :] * gx[:, :, None, :]
    # y = 0 face: cells iy = 0, trace g(x, 0, t)
    gy = np.broadcast_to(exact(line[None, :, None], 0.0, t_nodes[:, None, :]), (n_slabs, n1, nt))
    view[:, :n, :, :] += -sub_col[None, :, None, None] * m_diag[None, None, None, :] * gy[:, None, :, :]
    return b.reshape(-1)


def assemble_system(
    t_ops: TemporalOps,
    s_ops: SpatialOps | DgSemSpatialOps,
    n_slabs: int,
    periodic_in_time: bool = False,
    exact: Callable | None = None,
) -> SpaceTimeSystem:
    """Build A = I (x) K_tau + K_spatial (x) M_tau, B = -I (x) C_tau, and rhs.

    ``exact`` is the manufactured space-time solution; it supplies the
    initial interpolant (feeding the first slab through the C_tau
    coupling) and the inflow traces. Signature exact(x, t) in 1D,
    exact(x, y, t) in 2D, vectorized over arrays.
    """
    if periodic_in_time and exact is not None:
        raise InconsistentData("periodic-in-time systems take homogeneous data only")
    if periodic_in_time and s_ops.boundary != "periodic":
        raise InconsistentData("periodic-in-time requires a periodic spatial operator")
    nsp = s_ops.n_dofs
    nt = t_ops.n_t
    eye = sp.identity(nsp, format="csr")
    a_blk = (sp.kron(eye, t_ops.K_tau) + sp.kron(s_ops.matrix, t_ops.M_tau)).tocsr()
    b_blk = (-sp.kron(eye, t_ops.C_tau)).tocsr()
    rhs = np.zeros(n_slabs * nsp * nt)
    if exact is not None:
        if s_ops.boundary != "inflow":
            raise InconsistentData("manufactured data requires an inflow spatial operator")
        rhs = _inflow_rhs(t_ops, s_ops, n_slabs, exact)
        if s_ops.dims == 1:
            u0 = exact(s_ops.coords[0], 0.0)
        else:
            line = s_ops.coords[0]
            u0 = exact(line[None, :], line[:, None], 0.0).reshape(-1)
        rhs.reshape(n_slabs, nsp, nt)[0, :, 0] += u0
    return SpaceTimeSystem(a_blk, b_blk, n_slabs, periodic_in_time, rhs, t_ops, s_ops)
