"""Self-contained property and oracle suite behind ``dhls verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernel import Kernel, apply_T_direct, apply_T_fft, build_kernel, dhls_value
from .lattice import Field, LatticeBox, Mode, ProblemParams, check_embedding
from .solver import SolverConfig, el_residual, oracle_spectral, solve_truncated

THREE_POINT_C = (0.5 + math.sqrt(8.25)) / 2
# every honest case here converges in a few hundred iterations
CONFIG = SolverConfig(max_iter=2000)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


KernelFactory = Callable[[ProblemParams, LatticeBox], Kernel]


def corrupted_kernel(params: ProblemParams, box: LatticeBox) -> Kernel:
    """Negative control: breaks the symmetry weight(d) = weight(-d) at d = +e_1."""
    k = build_kernel(params, box)
    w = k.weights.copy()
    w[tuple(n - 1 + (1 if axis == 0 else 0) for axis, n in enumerate(box.shape))] *= 1.5
    return Kernel(box, k.beta, w)


def _rel_inf(a, b) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def check_embedding_inequality(rng, make_kernel) -> CheckResult:
    bad = 0
    for _ in range(1000):
        v = rng.random(rng.integers(1, 50)) ** rng.uniform(0.5, 6)
        p = rng.uniform(1, 8)
        q = rng.uniform(p, 8)
        bad += not check_embedding(v, p, q)
    return CheckResult("embedding |a|_q <= |a|_p", bad == 0, f"{bad} violations / 1000")


def check_backends(rng, make_kernel) -> CheckResult:
    worst = 0.0
    for n, radius in ((1, 20), (2, 6), (3, 3)):
        params = ProblemParams(n, 2.0, 2.0, 0.5 * n, Mode.TRUNCATED)
        box = LatticeBox.cube(n, radius)
        k = make_kernel(params, box)
        for _ in range(100):
            f = Field(box, rng.random(box.shape))
            worst = max(worst, _rel_inf(apply_T_fft(k, f).values, apply_T_direct(k, f).values))
    return CheckResult("direct vs fast backend", bool(worst <= 1e-10), f"max rel dev {worst:.3e}")


def check_symmetry(rng, make_kernel) -> CheckResult:
    worst = 0.0
    for n, radius in ((1, 10), (2, 4)):
        params = ProblemParams(n, 2.0, 2.0, 0.5, Mode.TRUNCATED)
        box = LatticeBox.cube(n, radius)
        k = make_kernel(params, box)
        for _ in range(50):
            f = Field(box, rng.random(box.shape))
            g = Field(box, rng.random(box.shape))
            a, b = dhls_value(k, f, g), dhls_value(k, g, f)
            worst = max(worst, abs(a - b) / abs(b))
    return CheckResult("<Tf, g> = <f, Tg>", worst <= 1e-10, f"max rel dev {worst:.3e}")


def check_three_point(rng, make_kernel) -> CheckResult:
    params = ProblemParams(1, 2.0, 2.0, 0.0, Mode.CRITICAL_BENCHMARK)
    box = LatticeBox.cube(1, 1)
    rep = solve_truncated(params, box, CONFIG, kernel=make_kernel(params, box))
    err = abs(rep.C_estimate - THREE_POINT_C)
    return CheckResult("three-point closed form", err <= 1e-6, f"|C - C*| = {err:.3e}")


def check_spectral_oracle(rng, make_kernel) -> CheckResult:
    worst = 0.0
    for alpha in (0.0, 0.25, 0.5):
        mode = Mode.CRITICAL_BENCHMARK if alpha == 0 else Mode.TRUNCATED
        params = ProblemParams(1, 2.0, 2.0, alpha, mode)
        for N in range(1, 9):
            box = LatticeBox.cube(1, N)
            k = make_kernel(params, box)
            C = solve_truncated(params, box, CONFIG, kernel=k).C_estimate
            lam = float(np.linalg.eigvalsh(k.dense)[-1])
            worst = max(worst, abs(C - oracle_spectral(box, k)), abs(C - lam))
    return CheckResult("solver vs spectral oracle (r=s=2)", worst <= 1e-9, f"max |dC| {worst:.3e}")


def check_two_point(rng, make_kernel) -> CheckResult:
    params = ProblemParams(1, 1.25, 1.25, 0.5)
    box = LatticeBox.interval(0, 1)
    rep = solve_truncated(params, box, CONFIG, kernel=make_kernel(params, box))
    spike = sorted(rep.f.flat.round(12)) == [0.0, 1.0]
    err = abs(rep.C_estimate - 1.0)
    return CheckResult("two-point supercritical spike pair", err <= 1e-8 and spike,
                       f"|C - 1| = {err:.3e}, spike={spike}")


def check_ascent_and_residuals(rng, make_kernel) -> CheckResult:
    worst_drop, worst_res, fails = 0.0, 0.0, 0
    cases = [(ProblemParams(1, 1.25, 1.25, 0.5), LatticeBox.cube(1, 6)),
             (ProblemParams(1, 1.2, 1.3, 0.5), LatticeBox.cube(1, 8)),
             (ProblemParams(2, 1.25, 1.25, 1.0), LatticeBox.cube(2, 3)),
             (ProblemParams(1, 2.0, 2.0, 0.0, Mode.CRITICAL_BENCHMARK), LatticeBox.cube(1, 8))]
    for params, box in cases:
        k = make_kernel(params, box)
        rep = solve_truncated(params, box, CONFIG, kernel=k)
        h = np.asarray(rep.J_history)
        worst_drop = max(worst_drop, float(np.max(h[:-1] - h[1:], initial=0.0)))
        if rep.converged:
            res = el_residual(rep.f, rep.g, rep.C_estimate, k, params)
            worst_res = max(worst_res, res)
        else:
            fails += 1
    ok = worst_drop <= 1e-12 and worst_res <= 1e-8 and fails == 0
    return CheckResult("ascent + Euler-Lagrange residual", ok,
                       f"max drop {worst_drop:.1e}, max residual {worst_res:.1e}, "
                       f"unconverged {fails}")


def check_multipliers(rng, make_kernel) -> CheckResult:
    params = ProblemParams(1, 1.2, 1.25, 0.5)
    box = LatticeBox.cube(1, 5)
    k = make_kernel(params, box)
    rep = solve_truncated(params, box, CONFIG, kernel=k)
    lam, mu = rep.multipliers
    Tg = apply_T_direct(k, rep.g).flat
    Tf = apply_T_direct(k, rep.f).flat
    d = max(np.abs(params.r * rep.f.flat ** (params.r - 1) - lam * Tg).max() / (lam * Tg.max()),
            np.abs(params.s * rep.g.flat ** (params.s - 1) - mu * Tf).max() / (mu * Tf.max()))
    return CheckResult("multipliers lambda = r/C, mu = s/C", bool(d <= 1e-8), f"defect {d:.3e}")


CHECKS = [check_embedding_inequality, check_backends, check_symmetry, check_three_point,
          check_spectral_oracle, check_two_point, check_ascent_and_residuals, check_multipliers]


def run_suite(seed: int = 0, make_kernel: KernelFactory = build_kernel) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for check in CHECKS:
        try:
            out.append(check(rng, make_kernel))
        except Exception as exc:  # a crashing check is a failing check
            out.append(CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out


def format_results(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}" for r in results]
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
