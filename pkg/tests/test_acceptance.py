"""Exit criteria, one test each; every test prints a PASS/FAIL line."""

import math
import time

import numpy as np

from dhls.analysis import brezis_lieb_report, concentration_check, critical_growth, sweep
from dhls.kernel import apply_T_direct, apply_T_fft, build_kernel
from dhls.lattice import Field, LatticeBox, Mode, ProblemParams, check_embedding
from dhls.solver import SolverConfig, el_residual, oracle_spectral, solve_truncated

TWO_LN2 = 2 * math.log(2)


def l2(alpha, n=1):
    mode = Mode.CRITICAL_BENCHMARK if alpha == 0 else Mode.TRUNCATED
    return ProblemParams(n, 2.0, 2.0, alpha, mode)


def test_01_oracle_equivalence(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (0.0, 0.25, 0.5):
        for N in range(1, 9):
            box = LatticeBox.cube(1, N)
            C = solve_truncated(l2(alpha), box).C_estimate
            worst = max(worst, abs(C - oracle_spectral(box, build_kernel(l2(alpha), box))))
    dt = time.perf_counter() - t0
    criterion(1, worst <= 1e-9 and dt < 5, f"max |C - C_spectral| = {worst:.2e} (<= 1e-9), {dt:.2f}s (< 5s)")


def test_02_three_point(criterion):
    C = solve_truncated(l2(0.0), LatticeBox.cube(1, 1)).C_estimate
    target = (0.5 + math.sqrt(8.25)) / 2
    criterion(2, abs(C - target) <= 1e-6, f"C = {C:.10f}, target {target:.10f} (tol 1e-6)")


def test_03_two_point_saddle(criterion, supercritical_params):
    box = LatticeBox.interval(0, 1)
    symmetric = solve_truncated(supercritical_params, box, SolverConfig(starts=1))
    multi = solve_truncated(supercritical_params, box)
    spike = sorted(multi.f.flat) == [0.0, 1.0] and sorted(multi.g.flat) == [0.0, 1.0]
    ok = abs(multi.C_estimate - 1) <= 1e-8 and spike and symmetric.C_estimate < 1 - 1e-3
    criterion(3, ok, f"multi-start C = {multi.C_estimate!r} spike={spike}; "
                     f"symmetric start stalls at {symmetric.C_estimate:.6f}")


def test_04_monotonicity(criterion, supercritical_params):
    t0 = time.perf_counter()
    table = sweep(supercritical_params, range(1, 21), SolverConfig(threads=1))
    dt = time.perf_counter() - t0
    worst = float(np.min(np.diff(table.C)))
    criterion(4, worst >= -1e-8 and dt < 30,
              f"min C_(N+1) - C_N = {worst:.3e} (>= -1e-8), {dt:.1f}s (< 30s)")


def test_05_concentration(criterion, sweep40):
    res = concentration_check(sweep40)
    first = sweep40.records[0].max_f
    criterion(5, res.passed,
              f"floor_f = {res.floor_f:.4f} vs 0.5 * first max {0.5 * first:.4f}; "
              f"slope_f = {res.slope_f:.2e} (>= -1e-3)")


def test_06_strong_convergence(criterion, sweep40, supercritical_params):
    d = np.array(sweep40.distances_f)
    tail = d[len(d) // 2:]
    decreasing = bool(np.all(np.diff(tail) < 0))
    shrink = d[-1] < 0.1 * d[0]
    f_lim, _ = sweep40.limit_pair
    bl = brezis_lieb_report(sweep40.recentered_f, f_lim, supercritical_params.r)
    criterion(6, decreasing and shrink and bl.hypothesis,
              f"last-half distances decreasing={decreasing}, final {d[-1]:.4f} < 0.1 * {d[0]:.4f}"
              f" = {shrink}, Brezis-Lieb hypothesis={bl.hypothesis} (conclusion={bl.conclusion})")


def test_07_critical_growth_1d(criterion):
    t0 = time.perf_counter()
    table = critical_growth(1, [16 * 2 ** k for k in range(9)])
    dt = time.perf_counter() - t0
    incs = [(N, inc) for N, inc in table.increments if N >= 64]
    worst = max(abs(inc - TWO_LN2) / TWO_LN2 for _, inc in incs)
    criterion(7, worst <= 0.15 and len(incs) == 6 and dt < 60,
              f"max relative deviation of increments from 2 ln 2 = {worst:.2e} (<= 0.15), {dt:.1f}s")


def test_08_critical_growth_2d(criterion):
    table = critical_growth(2, [32, 64, 128, 256], tol=1e-10)
    dev = [abs(r - 2 * math.pi) / (2 * math.pi) for r in table.ratios]
    criterion(8, dev[-1] < dev[0],
              f"|lambda/lnN - 2pi|/2pi: N=32 {dev[0]:.4f}, N=256 {dev[-1]:.4f}")


def test_09_backend_equivalence(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst, count = 0.0, 0
    for n, radius in ((1, 40), (2, 8), (3, 4)):
        box = LatticeBox.cube(n, radius)
        k = build_kernel(l2(0.5 * n, n), box)
        for _ in range(100):
            f = Field(box, rng.random(box.shape))
            a = apply_T_direct(k, f).values
            worst = max(worst, float(np.abs(apply_T_fft(k, f).values - a).max() / a.max()))
            count += 1
    dt = time.perf_counter() - t0
    criterion(9, worst <= 1e-10 and count == 300 and dt < 10,
              f"max l^inf relative deviation {worst:.2e} over {count} fields, {dt:.2f}s")


def test_10_euler_lagrange(criterion, sweep40, supercritical_params):
    checked, worst = 0, 0.0
    cases = [(supercritical_params, LatticeBox.cube(1, N)) for N in (2, 6, 12)]
    cases += [(l2(0.25), LatticeBox.cube(1, 8)), (ProblemParams(2, 1.25, 1.25, 1.0), LatticeBox.cube(2, 3)),
              (ProblemParams(1, 1.2, 1.4, 0.3), LatticeBox.cube(1, 10))]
    for params, box in cases:
        rep = solve_truncated(params, box)
        if rep.converged:
            k = build_kernel(params, box)
            res = el_residual(rep.f, rep.g, rep.C_estimate, k, params)
            worst = max(worst, res)
            checked += 1
    for rec in sweep40.records:
        if rec.converged:
            worst = max(worst, rec.el_residual)
            checked += 1
    criterion(10, worst <= 1e-8 and checked == len(cases) + len(sweep40.records),
              f"max el_residual {worst:.2e} over {checked} converged reports (<= 1e-8)")


def test_11_embedding(criterion):
    rng = np.random.default_rng(11)
    bad = 0
    for _ in range(1000):
        v = rng.random(rng.integers(1, 100)) ** rng.uniform(0.1, 10)
        p = rng.uniform(1, 10)
        q = rng.uniform(p, 12)
        bad += not check_embedding(v, p, q)
    criterion(11, bad == 0, f"{bad} violations in 1000 cases")
