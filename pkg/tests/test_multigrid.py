import numpy as np
import pytest

from stmg import multigrid as mg
from stmg import operators
from stmg.errors import Diverged, OddDimension
from stmg.experiments import ProblemSpec, build_systems, l2_error
from stmg.quadrature import gauss_rule, lagrange_eval_matrix, lgl_rule
from stmg.verify import (
    dense_full_matrix,
    dense_prolongation_matrix,
    dense_restriction_matrix,
    dense_smoother_matrix,
)


def _periodic_system(p_t=0, n_x=4, n_slabs=4, dt=1.0, dx=1.0):
    t_ops = operators.temporal_operators(p_t, dt)
    s_ops = operators.spatial_fv_operator(n_x, dx, 1.0, "periodic")
    return operators.assemble_system(t_ops, s_ops, n_slabs, periodic_in_time=True)


def _inflow_pair(p_t=0, p_x=0, n_x=8, n_slabs=4, mu=1.0, strategy="semi"):
    spec = ProblemSpec(1, p_t, p_x, n_x, n_slabs, mu)
    return build_systems(spec, strategy) + (spec,)


def test_time_transfer_degenerate():
    tt = mg.build_time_transfer(0)
    assert tt.R1.tolist() == [[1.0]]
    assert tt.R2.tolist() == [[1.0]]


@pytest.mark.parametrize("p_t", [0, 1, 2, 3])
def test_time_transfer_against_high_order_quadrature(p_t):
    # recompute the cross-mass integrals with a 50-point rule
    n = p_t + 1
    rule = lgl_rule(n)
    fine = (rule.nodes + 1.0) / 2.0
    coarse = rule.nodes + 1.0
    gx, gw = gauss_rule(50)
    t1 = (gx + 1.0) / 2.0
    f_at = lagrange_eval_matrix(fine, t1)
    m1 = 0.5 * f_at.T @ (gw[:, None] * lagrange_eval_matrix(coarse, t1))
    m2 = 0.5 * f_at.T @ (gw[:, None] * lagrange_eval_matrix(coarse, t1 + 1.0))
    m_inv = np.diag(2.0 / rule.weights)
    tt = mg.build_time_transfer(p_t)
    assert np.max(np.abs(tt.R1 - (m_inv @ m1).T)) <= 1e-12
    assert np.max(np.abs(tt.R2 - (m_inv @ m2).T)) <= 1e-12


@pytest.mark.parametrize("p_t", [0, 1, 2, 3])
def test_time_prolongation_preserves_constants(p_t):
    tt = mg.build_time_transfer(p_t)
    ones = np.ones(p_t + 1)
    assert np.max(np.abs(tt.R1.T @ ones - ones)) <= 1e-13
    assert np.max(np.abs(tt.R2.T @ ones - ones)) <= 1e-13


@pytest.mark.parametrize("p_x", [0, 1, 2])
def test_space_transfer_pair(p_x):
    st = mg.build_space_transfer(p_x)
    ones = np.ones(p_x + 1)
    # prolongation re-expands exactly (it is polynomial evaluation)
    rule = lgl_rule(p_x + 1)
    for deg in range(p_x + 1):
        coarse_poly = rule.nodes**deg
        child1 = ((rule.nodes - 1.0) / 2.0) ** deg
        child2 = ((rule.nodes + 1.0) / 2.0) ** deg
        assert np.max(np.abs(st.P1 @ coarse_poly - child1)) <= 1e-13
        assert np.max(np.abs(st.P2 @ coarse_poly - child2)) <= 1e-13
    # restriction preserves constants and inverts prolongation
    assert np.max(np.abs(st.R1 @ ones + st.R2 @ ones - ones)) <= 1e-13
    assert np.max(np.abs(st.R1 @ st.P1 + st.R2 @ st.P2 - np.eye(p_x + 1))) <= 1e-12


def test_space_transfer_agglomeration_case():
    st = mg.build_space_transfer(0)
    assert st.R1.tolist() == [[0.5]] and st.R2.tolist() == [[0.5]]
    assert st.P1.tolist() == [[1.0]] and st.P2.tolist() == [[1.0]]


@pytest.mark.parametrize("p_t", [0, 1, 2])
def test_prolongation_is_restriction_transpose(p_t):
    fine, coarse, _ = _inflow_pair(p_t=p_t, n_slabs=4)
    r = np.array([mg.restrict("semi", e, fine, coarse) for e in np.eye(fine.n_unknowns)]).T
    p = np.array([mg.prolong("semi", e, fine, coarse) for e in np.eye(coarse.n_unknowns)]).T
    assert np.array_equal(p, r.T)


def test_full_coarsening_prolongation_scaling_1d():
    fine, coarse, _ = _inflow_pair(p_x=0, strategy="full")
    r = np.array([mg.restrict("full", e, fine, coarse) for e in np.eye(fine.n_unknowns)]).T
    p = np.array([mg.prolong("full", e, fine, coarse) for e in np.eye(coarse.n_unknowns)]).T
    assert np.array_equal(p, 2.0 * r.T)


def test_spatial_restriction_preserves_constants():
    # the time part of the restriction sums slab pairs (transpose without
    # renormalization), so compare against the semi result: the extra
    # spatial averaging of the full strategy must leave constants alone
    fine, coarse, _ = _inflow_pair(strategy="full")
    ones = np.ones(fine.n_unknowns)
    semi = mg.restrict("semi", ones, fine, fine)
    assert np.allclose(semi, 2.0, atol=1e-13)  # slab-pair sum of ones
    full = mg.restrict("full", ones, fine, coarse)
    assert np.allclose(full, 2.0, atol=1e-13)


def test_spatial_prolongation_duplicates_cell_values():
    fine, coarse, _ = _inflow_pair(p_t=0, n_slabs=2, strategy="full")
    vals = np.arange(1.0, coarse.n_unknowns + 1.0)
    out = mg.prolong("full", vals, fine, coarse)
    grid = out.reshape(fine.N, fine.s_ops.N_x)
    ref = vals.reshape(coarse.N, coarse.s_ops.N_x)
    for c in range(coarse.N):
        for j in range(coarse.s_ops.N_x):
            assert grid[2 * c, 2 * j] == grid[2 * c, 2 * j + 1] == ref[c, j]


def test_restrict_prolong_doubles_coarse_constants():
    # composition on coarse constants: factor 2 from the slab-pair sum,
    # factor 1 from the spatial averaging
    fine, coarse, _ = _inflow_pair(strategy="full")
    ones = np.ones(coarse.n_unknowns)
    roundtrip = mg.restrict("full", mg.prolong("full", ones, fine, coarse), fine, coarse)
    assert np.allclose(roundtrip, 2.0 * ones, atol=1e-13)


@pytest.mark.parametrize("p", [0, 1])
def test_2d_transfers_match_dense_matrices(p):
    spec = ProblemSpec(2, p, p, 4, 4, 2.0)
    fine, coarse = build_systems(spec, "full")
    r_dense = dense_restriction_matrix("full", fine)
    p_dense = dense_prolongation_matrix("full", fine)
    r_cols = np.array([mg.restrict("full", e, fine, coarse) for e in np.eye(fine.n_unknowns)]).T
    p_cols = np.array([mg.prolong("full", e, fine, coarse) for e in np.eye(coarse.n_unknowns)]).T
    assert np.max(np.abs(r_cols - r_dense)) <= 1e-14
    assert np.max(np.abs(p_cols - p_dense)) <= 1e-14


@pytest.mark.parametrize("dims,p", [(1, 1), (2, 0)])
@pytest.mark.parametrize("strategy", ["semi", "full"])
def test_cycle_matches_dense_higher_cases(dims, p, strategy):
    spec = ProblemSpec(dims, p, p, 4, 4, 2.0)
    fine, coarse = build_systems(spec, strategy)
    cfg = mg.MgConfig(strategy=strategy)
    l_fine = dense_full_matrix(fine)
    l_coarse = dense_full_matrix(coarse)
    s = dense_smoother_matrix(fine, cfg.omega_t)
    r = dense_restriction_matrix(strategy, fine)
    pm = dense_prolongation_matrix(strategy, fine)
    m_ref = s @ (np.eye(fine.n_unknowns) - pm @ np.linalg.solve(l_coarse, r @ l_fine)) @ s
    zero = np.zeros(fine.n_unknowns)
    cols = [mg.two_grid_cycle(fine, coarse, e, zero, cfg) for e in np.eye(fine.n_unknowns)]
    scale = max(1.0, np.abs(m_ref).max())
    assert np.max(np.abs(np.array(cols).T - m_ref)) <= 1e-11 * scale


def test_restrict_rejects_odd_extents():
    t_ops = operators.temporal_operators(0, 1.0)
    s_ops = operators.spatial_fv_operator(4, 0.25, 1.0, "periodic")
    sys3 = operators.assemble_system(t_ops, s_ops, 3, periodic_in_time=True)
    with pytest.raises(OddDimension):
        mg.restrict("semi", np.zeros(sys3.n_unknowns), sys3, sys3)
    s_odd = operators.spatial_fv_operator(6, 0.25, 1.0, "periodic")
    sys_odd = operators.assemble_system(t_ops, s_odd, 4, periodic_in_time=True)
    object.__setattr__(s_odd, "N_x", 5)  # forge an odd cell count
    with pytest.raises(OddDimension):
        mg.restrict("full", np.zeros(sys_odd.n_unknowns), sys_odd, sys_odd)


def test_jacobi_fixed_point(rng):
    fine, coarse, _ = _inflow_pair(p_t=1, p_x=1)
    u = mg.sequential_solve(fine, fine.rhs)
    out = mg.block_jacobi_sweep(fine, u, fine.rhs, 0.7)
    assert np.max(np.abs(out - u)) <= 1e-12 * max(1.0, np.abs(u).max())


def test_jacobi_iteration_matrix_matches_dense():
    sys = _periodic_system(p_t=0, n_x=4, n_slabs=4)
    omega = 0.5
    dense = dense_smoother_matrix(sys, omega)
    cols = [mg.block_jacobi_sweep(sys, e, np.zeros(sys.n_unknowns), omega) for e in np.eye(sys.n_unknowns)]
    assert np.max(np.abs(np.array(cols).T - dense)) <= 1e-13


def test_jacobi_slab_updates_are_independent(rng):
    # updating serially slab by slab from the frozen residual is bitwise
    # the same as the sweep, in any slab order
    fine, _, _ = _inflow_pair(p_t=1, n_slabs=4)
    u = rng.standard_normal(fine.n_unknowns)
    b = rng.standard_normal(fine.n_unknowns)
    ref = mg.block_jacobi_sweep(fine, u, b, 0.5)
    lu = mg._slab_lu(fine)
    r = fine.residual(b, u).reshape(fine.N, -1)
    for order in ([0, 1, 2, 3], [3, 1, 0, 2]):
        out = fine.slabs(np.array(u, copy=True))
        for s in order:
            out[s] += 0.5 * lu.solve(r[s])
        assert np.array_equal(out.reshape(-1), ref)


def test_smoother_high_frequency_action_matches_symbols():
    # restrict the dense sweep matrix to the high-frequency mode subspace
    # and compare its spectral radius with the symbol maximum
    from stmg import lfa, linalg
    from stmg.verify import harmonic_basis

    sys = _periodic_system(p_t=0, n_x=4, n_slabs=4)
    s_dense = dense_smoother_matrix(sys, 0.5)
    cfg = lfa.LfaConfig(mu=1.0, p_t=0, omega_t=0.5)
    grid = lfa.FrequencyGrid(4, 4)
    t_ops = sys.t_ops
    dense_max = 0.0
    symbol_max = 0.0
    for pair in grid.high_pairs("semi"):
        v = harmonic_basis(pair, 4, 4, sys.n_t)[:, : sys.n_t]
        restricted = v.conj().T @ (s_dense @ v) / (4 * 4)
        assert np.max(np.abs(s_dense @ v - v @ restricted)) <= 1e-10
        dense_max = max(dense_max, linalg.spectral_radius(restricted))
        symbol_max = max(symbol_max, linalg.spectral_radius(lfa.symbol_S(pair, cfg, t_ops)))
    assert dense_max == pytest.approx(symbol_max, abs=1e-10)


def test_single_slab_sweep_is_exact():
    spec = ProblemSpec(1, 1, 1, 8, 1, 1.0)
    fine, _ = build_systems(spec, "semi")
    u = mg.block_jacobi_sweep(fine, np.zeros(fine.n_unknowns), fine.rhs, 1.0)
    assert np.max(np.abs(fine.residual(fine.rhs, u))) <= 1e-10 * np.abs(fine.rhs).max()


def test_sequential_solve_residual(rng):
    fine, _, _ = _inflow_pair(p_t=1, p_x=1, n_x=8, n_slabs=4)
    b = rng.standard_normal(fine.n_unknowns)
    u = mg.sequential_solve(fine, b)
    assert np.max(np.abs(fine.residual(b, u))) <= 1e-10 * np.abs(b).max()


def test_sequential_solve_matches_dense_lu(rng):
    fine, _, _ = _inflow_pair(p_t=1, p_x=0, n_x=8, n_slabs=4)
    b = rng.standard_normal(fine.n_unknowns)
    u = mg.sequential_solve(fine, b)
    dense = dense_full_matrix(fine)
    ref = np.linalg.solve(dense, b)
    assert np.max(np.abs(u - ref)) <= 1e-10 * max(1.0, np.abs(ref).max())


def test_sequential_solve_zero_data_is_zero():
    t_ops = operators.temporal_operators(1, 0.5)
    s_ops = operators.spatial_dgsem_operator(1, 8, 0.125, 1.0, 1, "inflow")
    sys = operators.assemble_system(t_ops, s_ops, 4, periodic_in_time=False)
    u = mg.sequential_solve(sys, np.zeros(sys.n_unknowns))
    assert np.max(np.abs(u)) == 0.0


def test_sequential_solve_rejects_periodic():
    sys = _periodic_system()
    with pytest.raises(ValueError):
        mg.sequential_solve(sys, np.zeros(sys.n_unknowns))


@pytest.mark.parametrize("p", [0, 1])
def test_sequential_solve_convergence_order(p):
    errs = []
    for n_x in (16, 32, 64):
        spec = ProblemSpec(1, p, p, n_x, n_x, 1.0)
        fine, _ = build_systems(spec, "semi")
        u = mg.sequential_solve(fine, fine.rhs)
        errs.append(l2_error(spec, fine, u))
    order = np.log2(errs[-2] / errs[-1])
    assert order == pytest.approx(p + 1, abs=0.3)


def test_cycle_fixed_point():
    fine, coarse, _ = _inflow_pair(p_t=1, p_x=1, n_x=8, n_slabs=4)
    u = mg.sequential_solve(fine, fine.rhs)
    out = mg.two_grid_cycle(fine, coarse, u, fine.rhs, mg.MgConfig())
    assert np.max(np.abs(out - u)) <= 1e-11 * max(1.0, np.abs(u).max())


@pytest.mark.parametrize("strategy", ["semi", "full"])
def test_cycle_matches_dense_iteration_matrix(strategy):
    fine, coarse, _ = _inflow_pair(p_t=0, p_x=0, n_x=4, n_slabs=4, strategy=strategy)
    cfg = mg.MgConfig(strategy=strategy)
    l_fine = dense_full_matrix(fine)
    l_coarse = dense_full_matrix(coarse)
    s = dense_smoother_matrix(fine, cfg.omega_t)
    r = dense_restriction_matrix(strategy, fine)
    p = dense_prolongation_matrix(strategy, fine)
    m_ref = s @ (np.eye(fine.n_unknowns) - p @ np.linalg.solve(l_coarse, r @ l_fine)) @ s
    zero = np.zeros(fine.n_unknowns)
    cols = [mg.two_grid_cycle(fine, coarse, e, zero, cfg) for e in np.eye(fine.n_unknowns)]
    assert np.max(np.abs(np.array(cols).T - m_ref)) <= 1e-12


def test_error_contraction_tracks_symbol_prediction(rng):
    # periodic error propagation (dense, excluded modes deflated) stabilizes
    # below the predicted asymptotic factor plus 0.05
    from stmg import lfa
    from stmg.verify import dense_two_grid_matrix, harmonic_basis

    fine = _periodic_system(p_t=0, n_x=4, n_slabs=4)
    t_coarse = operators.temporal_operators(0, 2.0)
    s_fine = fine.s_ops
    coarse = operators.assemble_system(t_coarse, s_fine, 2, periodic_in_time=True)
    cfg = mg.MgConfig(strategy="semi")
    m = dense_two_grid_matrix(fine, coarse, cfg)
    lcfg = lfa.LfaConfig(mu=1.0, p_t=0, strategy="semi")
    grid = lfa.FrequencyGrid(4, 4)
    predicted = lfa.twogrid_factor(lcfg, grid).factor
    e = rng.standard_normal(fine.n_unknowns)
    # deflate the harmonics of excluded frequency pairs
    t_ops = fine.t_ops
    for pair in grid.low_pairs():
        if lfa.is_excluded(pair, lcfg, t_ops):
            v = harmonic_basis(pair, 4, 4, fine.n_t)
            e = e - (v @ (v.conj().T @ e) / (4 * 4)).real
    ratios = []
    for _ in range(40):
        e_next = m @ e
        ratios.append(np.linalg.norm(e_next) / np.linalg.norm(e))
        e = e_next
    assert ratios[-1] <= predicted + 0.05


def test_rate_formula_semantics():
    assert mg.rate_from_residuals([1.0, 1e-20]) == 0.0
    assert mg.rate_from_residuals([1.0, 0.5, 0.25, 0.2]) == pytest.approx(0.8)
    with pytest.raises(Diverged):
        mg.rate_from_residuals([1.0, 0.5, 30.0])


def test_measure_rate_on_small_problem():
    spec = ProblemSpec(1, 0, 0, 128, 8, 600.0)
    fine, coarse = build_systems(spec, "semi")
    rate = mg.measure_rate(fine, coarse, fine.rhs, mg.MgConfig())
    assert 0.15 <= rate <= 0.35
