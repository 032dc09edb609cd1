"""Fourier symbols of the multigrid components and convergence factors.

Under periodic boundary conditions every component of the two-grid
iteration acts block-diagonally on Fourier modes, so spectral questions
about the huge space-time operators reduce to dense matrices of size at
most 4 N_t. This module builds those symbols, sweeps them over the
discrete frequency grids, and reduces to:

* the smoothing factor: max spectral radius of the smoother symbol over
  the high-frequency set of the chosen coarsening strategy;
* the two-grid factor: max spectral radius of the coupled four-harmonic
  two-grid symbol over the low-frequency set, skipping the finitely many
  frequencies where a required symbol inverse is singular;
* a companion "contraction" number: the worst one-sweep 2-norm of the
  same symbol over interior low frequencies. The spectral radius governs
  the asymptotic regime; the contraction bounds a single sweep and is
  what per-iteration residual quotients of a solver run actually track.

Frequencies are the discrete equispaced sets theta = 2*pi*k/N in
(-pi, pi], never continuous samples, so the singular set stays finite
and the symbol sweep is the exact block diagonalization of the periodic
problem (anchored by the dense cross-checks in stmg.verify).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from stmg import linalg
from stmg.errors import ExcludedFrequency, SingularSymbol
from stmg.multigrid import TimeTransfer, build_time_transfer
from stmg.operators import TemporalOps, temporal_operators
from stmg.quadrature import stability_function

__all__ = [
    "FrequencyPair",
    "FrequencyGrid",
    "LfaConfig",
    "TransferSymbols",
    "TwoGridFactor",
    "SingularSymbol",
    "ExcludedFrequency",
    "shift",
    "frequencies",
    "symbol_L",
    "symbol_S",
    "symbols_transfer",
    "symbol_twogrid",
    "smoothing_factor",
    "optimal_damping",
    "twogrid_factor",
    "dft_verify",
    "SWEEP_COLUMNS",
    "sweep_row",
]

_PI = math.pi


def shift(theta: float) -> float:
    """Map a frequency to its aliasing partner half a period away."""
    if not -_PI < theta <= _PI + 1e-12:
        raise ValueError(f"frequency {theta} outside (-pi, pi]")
    return theta + _PI if theta < 0 else theta - _PI


def frequencies(n: int) -> np.ndarray:
    """The n grid frequencies 2*pi*k/n, k = 1 - n/2 .. n/2, in (-pi, pi]."""
    if n < 2 or n % 2:
        raise ValueError("frequency count must be even and >= 2")
    k = np.arange(1 - n // 2, n // 2 + 1)
    return 2.0 * _PI * k / n


@dataclass(frozen=True)
class FrequencyPair:
    theta_x: float
    theta_t: float

    def __post_init__(self):
        for v in (self.theta_x, self.theta_t):
            if not -_PI - 1e-12 < v <= _PI + 1e-12:
                raise ValueError(f"frequency {v} outside (-pi, pi]")


def _low(theta: float) -> bool:
    return -_PI / 2 < theta <= _PI / 2


@dataclass(frozen=True)
class FrequencyGrid:
    """Discrete frequency pairs for n_x cells and n_slabs slabs.

    Low frequencies under semi coarsening require only theta_t low; under
    full coarsening both components must be low. High sets are the
    complements.
    """

    n_x: int
    n_slabs: int

    def __post_init__(self):
        frequencies(self.n_x)
        frequencies(self.n_slabs)

    @property
    def theta_x(self) -> np.ndarray:
        return frequencies(self.n_x)

    @property
    def theta_t(self) -> np.ndarray:
        return frequencies(self.n_slabs)

    def is_low(self, pair: FrequencyPair, strategy: str) -> bool:
        if strategy == "semi":
            return _low(pair.theta_t)
        if strategy == "full":
            return _low(pair.theta_x) and _low(pair.theta_t)
        raise ValueError(f"unknown strategy {strategy!r}")

    def pairs(self):
        for tx in self.theta_x:
            for tt in self.theta_t:
                yield FrequencyPair(float(tx), float(tt))

    def high_pairs(self, strategy: str):
        for p in self.pairs():
            if not self.is_low(p, strategy):
                yield p

    def low_pairs(self):
        """The low set of the full splitting, which both two-grid sweeps use."""
        for p in self.pairs():
            if _low(p.theta_x) and _low(p.theta_t):
                yield p


@dataclass(frozen=True)
class LfaConfig:
    """Knobs of the symbol computations.

    mu is the CFL number a*dt/dx of the fine grid. Singularity exclusion
    uses |det| < sing_tol_coef * (max entry magnitude) ** n per matrix.
    """

    mu: float
    p_t: int
    omega_t: float = 0.5
    nu1: int = 1
    nu2: int = 1
    strategy: str = "semi"
    sing_tol_coef: float = 1e-10

    def __post_init__(self):
        if self.mu <= 0 or self.p_t < 0 or self.sing_tol_coef <= 0:
            raise ValueError("need mu > 0, p_t >= 0, sing_tol_coef > 0")
        if self.strategy not in ("semi", "full"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


def _beta(theta_x: float) -> complex:
    return 1.0 - np.exp(-1j * theta_x)


def _ref_ops(t_ops: TemporalOps) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """K, C and the reference mass diag(w)/2 (all dt-independent)."""
    return t_ops.K_tau, t_ops.C_tau, np.diag(t_ops.rule.weights / 2.0)


def symbol_L(f: FrequencyPair, cfg: LfaConfig, t_ops: TemporalOps, mu: float | None = None) -> np.ndarray:
    """Operator symbol: -e^{-i theta_t} C + K + mu (1 - e^{-i theta_x}) W/2.

    The advection scale a/dx enters only through the CFL number, applied
    to the reference mass matrix, so the symbol is the same for every
    (dt, dx) pair with that mu. ``mu`` overrides cfg.mu (coarse grids).
    """
    k, c, w2 = _ref_ops(t_ops)
    m = cfg.mu if mu is None else mu
    return (-np.exp(-1j * f.theta_t)) * c + k + (m * _beta(f.theta_x)) * w2


def _a_hat(f_theta_x: float, cfg: LfaConfig, t_ops: TemporalOps, mu: float | None = None) -> np.ndarray:
    k, c, w2 = _ref_ops(t_ops)
    m = cfg.mu if mu is None else mu
    return k + (m * _beta(f_theta_x)) * w2


def _sing_tol(cfg: LfaConfig, a: np.ndarray) -> float:
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:  # the zero matrix is singular at any tolerance
        return math.inf
    return cfg.sing_tol_coef * scale ** a.shape[0]


def symbol_S(f: FrequencyPair, cfg: LfaConfig, t_ops: TemporalOps) -> np.ndarray:
    """Smoother symbol (1-w) I + w e^{-i theta_t} A_hat^{-1} C."""
    a = _a_hat(f.theta_x, cfg, t_ops)
    if abs(linalg.det(a)) < _sing_tol(cfg, a):
        raise SingularSymbol(f"slab symbol singular at theta_x={f.theta_x}")
    _, c, _ = _ref_ops(t_ops)
    g = linalg.lu_solve(a, c.astype(complex))
    n = t_ops.n_t
    return (1.0 - cfg.omega_t) * np.eye(n, dtype=complex) + cfg.omega_t * np.exp(-1j * f.theta_t) * g


@dataclass(frozen=True)
class TransferSymbols:
    R_time: np.ndarray
    P_time: np.ndarray
    R_space: complex
    P_space: complex


def symbols_transfer(f: FrequencyPair, cfg: LfaConfig, transfer: TimeTransfer) -> TransferSymbols:
    """Restriction/prolongation symbols of both directions.

    Spatial agglomeration: R = (e^{-i theta_x} + 1)/2, P = (e^{i theta_x} + 1)/2.
    Temporal pair: R = e^{-i theta_t} R1 + R2, P = (e^{i theta_t} R1^T + R2^T)/2.
    """
    r_t = np.exp(-1j * f.theta_t) * transfer.R1 + transfer.R2
    p_t = 0.5 * (np.exp(1j * f.theta_t) * transfer.R1.T + transfer.R2.T)
    r_x = 0.5 * (np.exp(-1j * f.theta_x) + 1.0)
    p_x = 0.5 * (np.exp(1j * f.theta_x) + 1.0)
    return TransferSymbols(r_t.astype(complex), p_t.astype(complex), r_x, p_x)


def _harmonics(f: FrequencyPair) -> list[FrequencyPair]:
    gx, gt = shift(f.theta_x), shift(f.theta_t)
    return [
        f,
        FrequencyPair(gx, f.theta_t),
        FrequencyPair(f.theta_x, gt),
        FrequencyPair(gx, gt),
    ]


def _wrap(theta: float) -> float:
    """Reduce to the principal window (-pi, pi]."""
    while theta > _PI + 1e-12:
        theta -= 2.0 * _PI
    while theta <= -_PI - 1e-12:
        theta += 2.0 * _PI
    return theta


def _coarse_symbols(f: FrequencyPair, cfg: LfaConfig, t_ops: TemporalOps) -> list[np.ndarray]:
    """Coarse operator symbols to invert; the strategy sets size and CFL.

    Semi coarsening keeps dx, so the coarse CFL doubles; full coarsening
    doubles both steps and keeps it.
    """
    two_t = _wrap(2.0 * f.theta_t)
    if cfg.strategy == "semi":
        return [
            symbol_L(FrequencyPair(f.theta_x, two_t), cfg, t_ops, mu=2.0 * cfg.mu),
            symbol_L(FrequencyPair(shift(f.theta_x), two_t), cfg, t_ops, mu=2.0 * cfg.mu),
        ]
    two_x = _wrap(2.0 * f.theta_x)
    return [symbol_L(FrequencyPair(two_x, two_t), cfg, t_ops, mu=cfg.mu)]


def _exclusion_dets(f: FrequencyPair, cfg: LfaConfig, t_ops: TemporalOps) -> list[np.ndarray]:
    mats = [symbol_L(f, cfg, t_ops)]
    mats.append(_a_hat(f.theta_x, cfg, t_ops))
    mats.append(_a_hat(shift(f.theta_x), cfg, t_ops))
    mats.extend(_coarse_symbols(f, cfg, t_ops))
    return mats


def is_excluded(f: FrequencyPair, cfg: LfaConfig, t_ops: TemporalOps) -> bool:
    """True when any symbol the two-grid formula must invert (or the fine
    operator symbol itself) is singular at this frequency pair."""
    for m in _exclusion_dets(f, cfg, t_ops):
        if abs(linalg.det(m)) < _sing_tol(cfg, m):
            return True
    return False


def symbol_twogrid(
    f: FrequencyPair,
    cfg: LfaConfig,
    t_ops: TemporalOps,
    t_ops_coarse: TemporalOps | None = None,
    transfer: TimeTransfer | None = None,
    coarse_correction: bool = True,
) -> np.ndarray:
    """Four-harmonic two-grid symbol, size 4 N_t.

    S^{nu2} (I - P Lc^{-1} R L) S^{nu1} over the harmonics (tx, tt),
    (tx', tt), (tx, tt'), (tx', tt') with ' the shifted partner.
    ``coarse_correction=False`` replaces the bracket by the identity
    (diagnostic hook). Raises ExcludedFrequency on singular inverses.
    """
    if transfer is None:
        transfer = build_time_transfer(cfg.p_t)
    if t_ops_coarse is None:
        t_ops_coarse = t_ops  # symbols only read dt-independent blocks
    if is_excluded(f, cfg, t_ops):
        raise ExcludedFrequency(f"singular symbol at ({f.theta_x:.6g}, {f.theta_t:.6g})")
    n = t_ops.n_t
    harm = _harmonics(f)
    l_blocks = [symbol_L(h, cfg, t_ops) for h in harm]
    s_blocks = [symbol_S(h, cfg, t_ops) for h in harm]
    s_tilde = np.zeros((4 * n, 4 * n), dtype=complex)
    l_tilde = np.zeros((4 * n, 4 * n), dtype=complex)
    for i in range(4):
        sl = slice(i * n, (i + 1) * n)
        s_tilde[sl, sl] = s_blocks[i]
        l_tilde[sl, sl] = l_blocks[i]
    if not coarse_correction:
        cgc = np.eye(4 * n, dtype=complex)
    else:
        coarse = _coarse_symbols(f, cfg, t_ops_coarse)
        syms = [symbols_transfer(h, cfg, transfer) for h in harm]
        if cfg.strategy == "semi":
            r_big = np.zeros((2 * n, 4 * n), dtype=complex)
            p_big = np.zeros((4 * n, 2 * n), dtype=complex)
            # harmonics 0 and 2 share theta_x, 1 and 3 share its shift
            r_big[0:n, 0:n] = syms[0].R_time
            r_big[0:n, 2 * n : 3 * n] = syms[2].R_time
            r_big[n : 2 * n, n : 2 * n] = syms[1].R_time
            r_big[n : 2 * n, 3 * n : 4 * n] = syms[3].R_time
            p_big[0:n, 0:n] = syms[0].P_time
            p_big[n : 2 * n, n : 2 * n] = syms[1].P_time
            p_big[2 * n : 3 * n, 0:n] = syms[2].P_time
            p_big[3 * n : 4 * n, n : 2 * n] = syms[3].P_time
            lc = np.zeros((2 * n, 2 * n), dtype=complex)
            lc[0:n, 0:n] = coarse[0]
            lc[n : 2 * n, n : 2 * n] = coarse[1]
        else:
            r_big = np.hstack([s.R_space * s.R_time for s in syms])
            p_big = np.vstack([s.P_space * s.P_time for s in syms])
            lc = coarse[0]
        rl = r_big @ l_tilde
        cgc = np.eye(4 * n, dtype=complex) - p_big @ linalg.lu_solve(lc, rl)
    out = cgc
    for _ in range(cfg.nu1):
        out = out @ s_tilde
    for _ in range(cfg.nu2):
        out = s_tilde @ out
    return out


def smoothing_factor(cfg: LfaConfig, grid: FrequencyGrid) -> float:
    """Worst spectral radius of the smoother symbol over high frequencies.

    The symbol is affine in A_hat^{-1} C, so its eigenvalues for every
    theta_t follow from one eigendecomposition per theta_x.
    """
    t_ops = temporal_operators(cfg.p_t, 1.0)
    _, c, _ = _ref_ops(t_ops)
    worst = 0.0
    for tx in grid.theta_x:
        a = _a_hat(float(tx), cfg, t_ops)
        lam = linalg.eigenvalues(linalg.lu_solve(a, c.astype(complex)))
        for tt in grid.theta_t:
            pair = FrequencyPair(float(tx), float(tt))
            if grid.is_low(pair, cfg.strategy):
                continue
            vals = np.abs(1.0 - cfg.omega_t + cfg.omega_t * np.exp(-1j * tt) * lam)
            worst = max(worst, float(vals.max()))
    return worst


def optimal_damping(cfg: LfaConfig, grid: FrequencyGrid) -> tuple[float, FrequencyPair]:
    """Grid search over omega in {0.01, ..., 1.00}.

    Minimizes max(|1-omega|, S) where S is the closed-form magnitude
    |1 - omega + e^{-i theta_t} omega R(-mu beta(theta_x))| over the
    strategy's high frequencies; returns the argmin and the frequency
    attaining the max there.
    """
    r_of = stability_function(cfg.p_t)
    pairs = list(grid.high_pairs(cfg.strategy))
    r_vals = np.array([r_of(-cfg.mu * _beta(p.theta_x)) for p in pairs])
    phase = np.array([np.exp(-1j * p.theta_t) for p in pairs])
    omegas = np.round(np.arange(1, 101) * 0.01, 2)
    best = (math.inf, 1.0, 0)
    for om in omegas:
        s_vals = np.abs(1.0 - om + om * phase * r_vals)
        k = int(np.argmax(s_vals))
        obj = max(abs(1.0 - om), float(s_vals[k]))
        if obj < best[0] - 1e-15:
            best = (obj, float(om), k)
    return best[1], pairs[best[2]]


@dataclass(frozen=True)
class TwoGridFactor:
    """Sweep result: spectral-radius factor plus the one-sweep contraction.

    ``factor`` is the asymptotic quantity (max spectral radius over the
    low set minus exclusions); ``contraction`` is the max 2-norm over
    interior low frequencies, the sharpest bound a single cycle obeys.
    """

    factor: float
    argmax: FrequencyPair
    contraction: float
    argmax_contraction: FrequencyPair
    excluded: int
    total: int


def _interior(pair: FrequencyPair) -> bool:
    return abs(pair.theta_x) < _PI / 2 - 1e-12 and abs(pair.theta_t) < _PI / 2 - 1e-12


def _sweep_column(args) -> tuple:
    tx, cfg, grid, t_ops, transfer = args
    best = (0.0, None)
    best_norm = (0.0, None)
    excluded = 0
    for tt in grid.theta_t:
        pair = FrequencyPair(float(tx), float(tt))
        if not _low(pair.theta_t):
            continue
        try:
            m = symbol_twogrid(pair, cfg, t_ops, transfer=transfer)
        except ExcludedFrequency:
            excluded += 1
            continue
        rho = linalg.spectral_radius(m)
        if rho > best[0]:
            best = (rho, pair)
        if _interior(pair):
            nrm = math.sqrt(max(linalg.spectral_radius(m.conj().T @ m), 0.0))
            if nrm > best_norm[0]:
                best_norm = (nrm, pair)
    return best, best_norm, excluded


def twogrid_factor(cfg: LfaConfig, grid: FrequencyGrid, threads: int = 1) -> TwoGridFactor:
    """Sweep the two-grid symbol over the low-frequency grid.

    Both reductions come from one sweep; excluded frequencies are counted
    so a miscalibrated singularity tolerance is visible in the output.
    """
    t_ops = temporal_operators(cfg.p_t, 1.0)
    transfer = build_time_transfer(cfg.p_t)
    cols = [float(tx) for tx in grid.theta_x if _low(float(tx))]
    tasks = [(tx, cfg, grid, t_ops, transfer) for tx in cols]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_column, tasks))
    else:
        results = [_sweep_column(t) for t in tasks]
    factor, argmax = 0.0, FrequencyPair(0.0, 0.0)
    contraction, argmax_n = 0.0, FrequencyPair(0.0, 0.0)
    excluded = 0
    for (rho, pair), (nrm, pair_n), exc in results:
        excluded += exc
        if pair is not None and rho > factor:
            factor, argmax = rho, pair
        if pair_n is not None and nrm > contraction:
            contraction, argmax_n = nrm, pair_n
    total = len(cols) * sum(1 for tt in grid.theta_t if _low(float(tt)))
    return TwoGridFactor(factor, argmax, contraction, argmax_n, excluded, total)


def dft_verify(u: np.ndarray, grid: FrequencyGrid) -> float:
    """Decompose a space-time vector into discrete modes and rebuild it.

    Coefficients follow the double sum with one coefficient per time-node
    slot; the return value is the max reconstruction error. The shifting
    equalities of the constructed modes are checked along the way and a
    violation raises ValueError.
    """
    u = np.asarray(u, dtype=float)
    n_sl, n_x = grid.n_slabs, grid.n_x
    nt = u.size // (n_sl * n_x)
    if nt * n_sl * n_x != u.size:
        raise ValueError("vector length is not divisible by the grid size")
    u3 = u.reshape(n_sl, n_x, nt)
    tx, tt = grid.theta_x, grid.theta_t
    fx = np.exp(1j * np.outer(np.arange(1, n_x + 1), tx))  # (j, kx)
    ft = np.exp(1j * np.outer(np.arange(1, n_sl + 1), tt))  # (n, kt)
    coeff = np.einsum("njl,jx,nt->xtl", u3.astype(complex), fx.conj(), ft.conj(), optimize=True)
    coeff /= n_x * n_sl
    recon = np.einsum("xtl,jx,nt->njl", coeff, fx, ft, optimize=True)
    err = float(np.max(np.abs(recon - u3)))
    # shifting equalities on a few constructed modes
    for kx in (0, n_x // 2, n_x - 1):
        for kt in (0, n_sl // 2, n_sl - 1):
            mode = np.einsum("j,n->nj", fx[:, kx], ft[:, kt])
            dev_t = np.max(np.abs(mode[:-1] - np.exp(-1j * tt[kt]) * mode[1:]))
            dev_x = np.max(np.abs(mode[:, :-1] - np.exp(-1j * tx[kx]) * mode[:, 1:]))
            if max(dev_t, dev_x) > 1e-12:
                raise ValueError("shifting equality violated on a constructed mode")
    return err


SWEEP_COLUMNS = [
    "strategy",
    "p_t",
    "mu",
    "omega_t",
    "nu1",
    "nu2",
    "factor",
    "argmax_theta_x",
    "argmax_theta_t",
    "excluded_count",
    "contraction",
]


def sweep_row(cfg: LfaConfig, result: TwoGridFactor) -> list[str]:
    """One CSV row per sweep, matching SWEEP_COLUMNS."""
    return [
        cfg.strategy,
        repr(cfg.p_t),
        repr(cfg.mu),
        repr(cfg.omega_t),
        repr(cfg.nu1),
        repr(cfg.nu2),
        repr(result.factor),
        repr(result.argmax.theta_x),
        repr(result.argmax.theta_t),
        repr(result.excluded),
        repr(result.contraction),
    ]
