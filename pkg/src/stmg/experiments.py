"""Manufactured advection problems and the experiment drivers.

The 1D problem transports sin(pi (x - t)) through the unit interval, the
2D one its tensor product with speed (1, 1); both take inflow data and
the initial interpolant from the exact solution. The time horizon always
follows the CFL number: T = N * mu * dx.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stmg import lfa, multigrid, operators

__all__ = [
    "ProblemSpec",
    "SolverRun",
    "build_systems",
    "exact_solution",
    "l2_error",
    "run_lfa_sweep",
    "run_solver_experiment",
    "run_grid_independence",
    "write_csv",
    "write_manifest",
    "LFA_SWEEP_DEFAULT_MUS",
]

LFA_SWEEP_DEFAULT_MUS = (1.0, 10.0, 50.0, 100.0, 200.0, 400.0, 600.0, 800.0)


@dataclass(frozen=True)
class ProblemSpec:
    """One advection test problem on the unit interval/square.

    mu fixes the slab height via dt = mu * dx; the horizon is then
    T = n_slabs * mu * dx. Speeds are pinned to 1 (and (1, 1) in 2D).
    """

    dims: int
    p_t: int
    p_x: int
    n_x: int
    n_slabs: int
    mu: float
    a: float = 1.0

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        if self.mu <= 0 or self.n_x < 2 or self.n_slabs < 1:
            raise ValueError("need mu > 0, n_x >= 2, n_slabs >= 1")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def dt(self) -> float:
        return self.mu * self.dx / self.a

    @property
    def T(self) -> float:
        return self.n_slabs * self.dt


def exact_solution(dims: int):
    if dims == 1:
        return lambda x, t: np.sin(np.pi * (x - t))
    return lambda x, y, t: np.sin(np.pi * (x - t)) * np.sin(np.pi * (y - t))


def build_systems(
    spec: ProblemSpec,
    strategy: str,
    periodic: bool = False,
) -> tuple[operators.SpaceTimeSystem, operators.SpaceTimeSystem]:
    """Assemble the fine system and its re-discretized coarse partner."""
    boundary = "periodic" if periodic else "inflow"
    exact = None if periodic else exact_solution(spec.dims)
    t_fine = operators.temporal_operators(spec.p_t, spec.dt)
    s_fine = operators.spatial_dgsem_operator(spec.p_x, spec.n_x, spec.dx, spec.a, spec.dims, boundary)
    fine = operators.assemble_system(t_fine, s_fine, spec.n_slabs, periodic, exact)
    t_coarse = operators.temporal_operators(spec.p_t, 2.0 * spec.dt)
    if strategy == "semi":
        s_coarse = s_fine
    else:
        s_coarse = operators.spatial_dgsem_operator(
            spec.p_x, spec.n_x // 2, 2.0 * spec.dx, spec.a, spec.dims, boundary
        )
    coarse = operators.assemble_system(t_coarse, s_coarse, spec.n_slabs // 2, periodic, None)
    return fine, coarse


def nodal_exact(spec: ProblemSpec, sys: operators.SpaceTimeSystem) -> np.ndarray:
    """Exact solution sampled at every space-time node of the system."""
    exact = exact_solution(spec.dims)
    t_nodes = (np.arange(sys.N)[:, None] + (sys.t_ops.rule.nodes[None, :] + 1.0) / 2.0) * sys.t_ops.dt
    coords = sys.s_ops.coords
    if spec.dims == 1:
        vals = exact(coords[0][None, :, None], t_nodes[:, None, :])
    else:
        line = coords[0]
        xg = np.tile(line[None, :], (len(line), 1)).reshape(-1)
        yg = np.repeat(line, len(line))
        vals = exact(xg[None, :, None], yg[None, :, None], t_nodes[:, None, :])
    return np.ascontiguousarray(np.broadcast_to(vals, (sys.N, sys.n_space, sys.n_t))).reshape(-1)


def l2_error(spec: ProblemSpec, sys: operators.SpaceTimeSystem, u: np.ndarray) -> float:
    """Space-time L2 norm of the nodal error under the collocation weights."""
    diff = (np.asarray(u) - nodal_exact(spec, sys)).reshape(sys.N, sys.n_space, sys.n_t)
    wt = sys.t_ops.rule.weights * sys.t_ops.dt / 2.0
    w1 = sys.s_ops.node_weights * spec.dx / 2.0
    wx = np.tile(w1, spec.n_x)
    wsp = wx if spec.dims == 1 else np.outer(wx, wx).reshape(-1)
    return float(np.sqrt(np.einsum("sjt,j,t->", diff**2, wsp, wt)))


@dataclass(frozen=True)
class SolverRun:
    spec: ProblemSpec
    cfg: multigrid.MgConfig
    rate: float
    residuals: list[float]
    seconds: float


def run_solver_experiment(
    spec: ProblemSpec,
    cfg: multigrid.MgConfig,
    iters: int = 60,
) -> SolverRun:
    """Measure the asymptotic two-grid rate on the manufactured problem."""
    t0 = time.perf_counter()
    fine, coarse = build_systems(spec, cfg.strategy)
    norms = multigrid.iterate_two_grid(fine, coarse, fine.rhs, cfg, iters)
    rate = multigrid.rate_from_residuals(norms)
    return SolverRun(spec, cfg, rate, norms, time.perf_counter() - t0)


def run_lfa_sweep(
    strategies=("semi", "full"),
    p_ts=(0, 1),
    mus=LFA_SWEEP_DEFAULT_MUS,
    n_xs=(32,),
    n_slabs: int = 8,
    omega_t: float = 0.5,
    nu1: int = 1,
    nu2: int = 1,
    threads: int = 1,
) -> list[dict]:
    """Smoothing and two-grid factors for every parameter combination."""
    rows = []
    for n_x in n_xs:
        grid = lfa.FrequencyGrid(n_x, n_slabs)
        for strategy in strategies:
            for p_t in p_ts:
                for mu in mus:
                    cfg = lfa.LfaConfig(float(mu), int(p_t), omega_t, nu1, nu2, strategy)
                    res = lfa.twogrid_factor(cfg, grid, threads=threads)
                    smooth = lfa.smoothing_factor(cfg, grid)
                    row = dict(zip(lfa.SWEEP_COLUMNS, lfa.sweep_row(cfg, res)))
                    row["n_x"] = repr(n_x)
                    row["n_slabs"] = repr(n_slabs)
                    row["smoothing_factor"] = repr(smooth)
                    rows.append(row)
    return rows


def run_grid_independence(
    p: int = 1,
    n_xs=(32, 64, 128, 256, 512),
    mu: float = 600.0,
    n_slabs: int = 32,
    strategy: str = "semi",
    iters: int = 60,
) -> list[dict]:
    """Measured rates against spatial resolution at a fixed CFL number."""
    rows = []
    for n_x in n_xs:
        spec = ProblemSpec(1, p, p, n_x, n_slabs, mu)
        run = run_solver_experiment(spec, multigrid.MgConfig(strategy=strategy), iters)
        rows.append(
            {
                "p": repr(p),
                "n_x": repr(n_x),
                "mu": repr(mu),
                "n_slabs": repr(n_slabs),
                "strategy": strategy,
                "rate": repr(run.rate),
            }
        )
    return rows


def write_csv(path: str | Path, rows: list[dict]) -> Path:
    """RFC-4180-style CSV with a header row; values already formatted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return path
    header = list(rows[0].keys())
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_manifest(path: str | Path, command: str, params: dict, seconds: float, outputs: list[str]) -> Path:
    import numpy
    import scipy

    import stmg

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "parameters": params,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "seconds": seconds,
        "outputs": outputs,
        "versions": {
            "stmg": stmg.__version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "kernels": stmg.backend(),
        },
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
