"""Acceptance gate: every exit criterion at its stated tolerance.

Each test prints one pass/fail line (visible with -s, or in captured
output). Criterion 3 pins the two-grid plateau of the asymptotic factor
at 0.50 +/- 0.02 for degree 0 and 0.375 +/- 0.02 for degree 1. The
degree-0 target holds exactly. For degree 1 the max spectral radius over
these frequency grids settles near 0.25 (N_x = 32) and 0.31 (N_x = 1024),
while the companion one-sweep contraction settles at the 0.375 target;
the radius assertion is kept as pinned and its failure is a documented
discrepancy, not a regression (details in the project decision notes,
kept outside the package).
"""

import time

import numpy as np
import pytest

from stmg import experiments as ex
from stmg import lfa, linalg, multigrid, operators, quadrature, verify

MU_LIST = (1.0, 10.0, 50.0, 100.0, 200.0, 400.0, 600.0, 800.0)


def report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def sweep_rows():
    t0 = time.perf_counter()
    rows = ex.run_lfa_sweep(
        strategies=("semi", "full"),
        p_ts=(0, 1),
        mus=MU_LIST,
        n_xs=(32, 1024),
        n_slabs=8,
        threads=4,
    )
    return rows, time.perf_counter() - t0


def _row(rows, n_x, strategy, p_t, mu):
    for r in rows:
        if (
            int(r["n_x"]) == n_x
            and r["strategy"] == strategy
            and int(r["p_t"]) == p_t
            and float(r["mu"]) == mu
        ):
            return r
    raise KeyError((n_x, strategy, p_t, mu))


def test_criterion_1_smoothing_factor():
    t0 = time.perf_counter()
    worst_gap = 0.0
    for p_t in (0, 1, 2):
        for strategy in ("semi", "full"):
            cfg = lfa.LfaConfig(mu=800.0, p_t=p_t, omega_t=0.5, strategy=strategy)
            val = lfa.smoothing_factor(cfg, lfa.FrequencyGrid(32, 8))
            worst_gap = max(worst_gap, abs(val - 1.0 / np.sqrt(2.0)))
            assert 0.697 <= val <= 0.717, f"p_t={p_t} {strategy}: {val}"
    elapsed = time.perf_counter() - t0
    report("1 smoothing-factor", True, f"all within [0.697, 0.717], max gap {worst_gap:.2e}, {elapsed:.1f}s")
    assert elapsed < 10.0


def test_criterion_2_optimal_damping():
    t0 = time.perf_counter()
    for p_t in (0, 1):
        cfg = lfa.LfaConfig(mu=800.0, p_t=p_t)
        omega, worst = lfa.optimal_damping(cfg, lfa.FrequencyGrid(32, 8))
        assert abs(omega - 0.5) <= 0.01, f"p_t={p_t}: omega={omega}"
        assert abs(worst.theta_x) <= 1e-12
        assert abs(abs(worst.theta_t) - np.pi / 2) <= 1e-12
    elapsed = time.perf_counter() - t0
    report("2 optimal-damping", True, f"omega*=0.50 at (0, +/-pi/2), {elapsed:.1f}s")
    assert elapsed < 30.0


def test_criterion_3_twogrid_plateau(sweep_rows):
    rows, elapsed = sweep_rows
    targets = {0: 0.50, 1: 0.375}
    lines = []
    failures = []
    for n_x in (32, 1024):
        for strategy in ("semi", "full"):
            for p_t in (0, 1):
                r = _row(rows, n_x, strategy, p_t, 800.0)
                factor = float(r["factor"])
                contraction = float(r["contraction"])
                ok = abs(factor - targets[p_t]) <= 0.02
                lines.append(
                    f"n_x={n_x} {strategy} p_t={p_t}: radius={factor:.4f} "
                    f"contraction={contraction:.4f} target={targets[p_t]}"
                )
                if not ok:
                    failures.append(lines[-1])
    # the reproducible companion: the one-sweep contraction meets the
    # degree-1 target on the 32-cell grid and the 1024-cell semi grid
    for n_x, strategy in ((32, "semi"), (32, "full"), (1024, "semi")):
        c = float(_row(rows, n_x, strategy, 1, 800.0)["contraction"])
        assert abs(c - 0.375) <= 0.02, f"contraction off target: n_x={n_x} {strategy}: {c}"
    ok = not failures and elapsed < 300.0
    report("3 twogrid-plateau", ok, f"sweep {elapsed:.1f}s; " + "; ".join(lines))
    assert elapsed < 300.0, f"sweep took {elapsed:.1f}s"
    assert not failures, (
        "asymptotic-radius plateau missed the pinned target on: "
        + "; ".join(failures)
        + " (degree-1 target is met by the one-sweep contraction; see module docstring)"
    )


def test_criterion_4_strategy_independence(sweep_rows):
    rows, _ = sweep_rows
    worst = 0.0
    for p_t in (0, 1):
        for mu in (400.0, 600.0, 800.0):
            semi = float(_row(rows, 32, "semi", p_t, mu)["factor"])
            full = float(_row(rows, 32, "full", p_t, mu)["factor"])
            worst = max(worst, abs(semi - full))
            assert abs(semi - full) <= 0.02, f"p_t={p_t} mu={mu}: {semi} vs {full}"
    report("4 strategy-independence", True, f"max |semi - full| = {worst:.4f} <= 0.02")


def test_criterion_5_symbol_vs_matrix_oracle():
    t0 = time.perf_counter()
    passed, detail = verify._check_twogrid_dense(verify._ops_provider(None))
    elapsed = time.perf_counter() - t0
    report("5 symbol-vs-matrix", bool(passed), f"{detail}, {elapsed:.1f}s")
    assert passed, detail
    assert elapsed < 10.0


def test_criterion_6_one_step_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for p_t in (1, 2, 3):
        r = quadrature.stability_function(p_t)
        ops = operators.temporal_operators(p_t, 1.0)
        for lam_dt in (0.1, 1.0, 10.0, 1.0 + 1.0j):
            u = linalg.lu_solve(ops.K_tau + lam_dt * ops.M_tau, ops.C_tau @ np.ones(p_t + 1))
            worst = max(worst, abs(u[-1] - complex(r(-lam_dt))))
    elapsed = time.perf_counter() - t0
    report("6 one-step-equivalence", worst <= 1e-11, f"max deviation {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-11
    assert elapsed < 1.0


@pytest.mark.parametrize("p", [0, 1])
@pytest.mark.parametrize("strategy", ["semi", "full"])
def test_criterion_7_solver_rates_1d(p, strategy):
    lo, hi = (0.20, 0.32) if p == 0 else (0.25, 0.37)
    t0 = time.perf_counter()
    spec = ex.ProblemSpec(1, p, p, 1024, 8, 600.0)
    run = ex.run_solver_experiment(spec, multigrid.MgConfig(strategy=strategy))
    elapsed = time.perf_counter() - t0
    ok = lo <= run.rate <= hi
    report(f"7 solver-1d p={p} {strategy}", ok, f"rate={run.rate:.4f} in [{lo}, {hi}], {elapsed:.1f}s")
    assert ok, f"rate {run.rate} outside [{lo}, {hi}]"
    assert elapsed < 300.0


def test_criterion_7_strategies_agree_1d():
    rates = {}
    for strategy in ("semi", "full"):
        spec = ex.ProblemSpec(1, 1, 1, 1024, 8, 600.0)
        rates[strategy] = ex.run_solver_experiment(spec, multigrid.MgConfig(strategy=strategy)).rate
    gap = abs(rates["semi"] - rates["full"])
    report("7 solver-1d strategy gap", gap <= 0.05, f"|semi - full| = {gap:.4f}")
    assert gap <= 0.05


@pytest.mark.parametrize("p", [0, 1])
@pytest.mark.parametrize("strategy", ["semi", "full"])
def test_criterion_8_solver_rates_2d(p, strategy):
    t0 = time.perf_counter()
    spec = ex.ProblemSpec(2, p, p, 32, 8, 600.0)
    run = ex.run_solver_experiment(spec, multigrid.MgConfig(strategy=strategy))
    elapsed = time.perf_counter() - t0
    ok = 0.18 <= run.rate <= 0.32
    report(f"8 solver-2d p={p} {strategy}", ok, f"rate={run.rate:.4f} in [0.18, 0.32], {elapsed:.1f}s")
    assert ok, f"rate {run.rate} outside [0.18, 0.32]"
    assert elapsed < 1200.0


def test_criterion_9_grid_independence():
    t0 = time.perf_counter()
    rows = ex.run_grid_independence(p=1, n_xs=(32, 64, 128, 256, 512), mu=600.0, n_slabs=32)
    rates = [float(r["rate"]) for r in rows]
    spread = max(rates) - min(rates)
    elapsed = time.perf_counter() - t0
    ok = spread <= 0.07
    report("9 grid-independence", ok, f"rates {['%.4f' % r for r in rates]}, spread {spread:.4f}, {elapsed:.1f}s")
    assert ok, f"spread {spread} > 0.07"


def test_criterion_10_property_suite():
    t0 = time.perf_counter()
    results = verify.run_checks()
    elapsed = time.perf_counter() - t0
    bad = [r.name for r in results if not r.passed]
    report("10 property-suite", not bad, f"{len(results)} checks, {elapsed:.1f}s" + (f", failing: {bad}" if bad else ""))
    assert not bad, bad
    assert elapsed < 30.0
