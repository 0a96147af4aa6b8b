"""Truncated best constants by alternating best-response ascent.

For fixed g the best unit-l^r response to <f, T g> is f ~ (T g)^(1/(r-1)),
and symmetrically for g. Alternating the two never decreases J and its
fixed points are exactly the normalized Euler-Lagrange pairs

    C f_i^(r-1) = (T g)_i,    C g_i^(s-1) = (T f)_i.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .kernel import Backend, Kernel, apply_T, build_kernel, dhls_value
from .lattice import DegenerateInputError, Field, LatticeBox, ProblemParams, normalize

DENSE_CAP = 4096
MULTISTART_CAP = 64


@dataclass(frozen=True)
class SolverConfig:
    tol_objective: float = 1e-12
    tol_residual: float = 1e-8
    max_iter: int = 10000
    starts: int = 8
    seed: int = 0
    backend: Backend = Backend.DIRECT
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "backend", Backend(self.backend))
        if not (self.tol_objective > 0 and self.tol_residual > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self):
        return {"tol_objective": self.tol_objective, "tol_residual": self.tol_residual,
                "max_iter": self.max_iter, "starts": self.starts, "seed": self.seed,
                "backend": self.backend.value, "threads": self.threads}


@dataclass
class SolverReport:
    C_estimate: float
    f: Field
    g: Field
    iterations: int
    J_history: list[float]
    el_residual: float
    converged: bool
    start_index: int
    wall_time: float
    seed: int = 0

    @property
    def multipliers(self) -> tuple[float, float]:
        """(lambda, mu) of the unnormalized Euler-Lagrange system."""
        return self.f.norm_exponent / self.C_estimate, self.g.norm_exponent / self.C_estimate


def best_response(Tg: Field | np.ndarray, p: float) -> tuple[np.ndarray, float]:
    """Maximize <f, Tg> over f >= 0 with |f|_p = 1.

    Returns the maximizer (shaped like ``Tg``) and the attained value, which
    equals |Tg|_{p/(p-1)}. Zero components of Tg map to zero.
    """
    t = np.asarray(Tg.values if isinstance(Tg, Field) else Tg, dtype=float)
    top = t.max(initial=0.0)
    if top <= 0:
        raise DegenerateInputError("best response to an identically zero potential")
    q = 1.0 / (p - 1.0)
    u = t / top
    if q > 8:
        with np.errstate(divide="ignore"):
            f = np.where(u > 0, np.exp(q * np.log(np.where(u > 0, u, 1.0))), 0.0)
    else:
        f = u ** q
    f = normalize(f, p)
    return f, float(np.dot(f.ravel(), t.ravel()))


def el_residual(f: Field, g: Field, C: float, kernel: Kernel, params: ProblemParams,
                backend: Backend | str = Backend.DIRECT) -> float:
    """Scaled sup-norm defect of C f^(r-1) = T g and C g^(s-1) = T f."""
    Tg = apply_T(kernel, g, backend).flat
    Tf = apply_T(kernel, f, backend).flat
    rf = np.abs(C * f.flat ** (params.r - 1) - Tg).max() / Tg.max()
    rg = np.abs(C * g.flat ** (params.s - 1) - Tf).max() / Tf.max()
    return float(max(rf, rg))


def initial_potentials(box: LatticeBox, s: float, config: SolverConfig) -> list[np.ndarray]:
    """Starting g's: center indicator, then alternately random spikes and random fields."""
    rng = np.random.default_rng(config.seed)
    center = np.zeros(box.shape)
    center[box.center_slices()] = 1.0
    starts = [normalize(center, s)]
    for k in range(1, config.starts):
        if k % 2:
            spike = np.zeros(box.count)
            spike[rng.integers(box.count)] = 1.0
            starts.append(spike.reshape(box.shape))
        else:
            starts.append(normalize(rng.random(box.shape), s))
    return starts


def _ascend(params: ProblemParams, kernel: Kernel, g0: np.ndarray, config: SolverConfig,
            start_index: int) -> SolverReport:
    t0 = time.perf_counter()
    box = kernel.box
    backend = config.backend
    g = Field(box, g0, params.s)
    history: list[float] = []
    f = g
    converged = False
    res = np.inf
    it = 0
    for it in range(1, config.max_iter + 1):
        fv, _ = best_response(apply_T(kernel, g, backend), params.r)
        f = Field(box, fv, params.r)
        gv, J = best_response(apply_T(kernel, f, backend), params.s)
        g = Field(box, gv, params.s)
        history.append(J)
        if len(history) >= 2:
            change = abs(history[-1] - history[-2]) / max(abs(history[-1]), 1e-300)
            if change < config.tol_objective:
                res = el_residual(f, g, dhls_value(kernel, f, g, backend), kernel, params, backend)
                if res < config.tol_residual:
                    converged = True
                    break
    C = dhls_value(kernel, f, g, backend)
    if not converged:
        res = el_residual(f, g, C, kernel, params, backend)
    return SolverReport(C, Field(box, f.values, params.r), Field(box, g.values, params.s), it,
                        history, res, converged, start_index, time.perf_counter() - t0,
                        config.seed)


def solve_truncated(params: ProblemParams, box: LatticeBox, config: SolverConfig = SolverConfig(),
                    *, kernel: Kernel | None = None,
                    extra_starts: list[np.ndarray] | None = None) -> SolverReport:
    """Best constant C_{r,s,alpha} restricted to ``box`` and a maximizing pair.

    Every start is run to convergence or max_iter; the largest C wins.
    Starts within tol_objective of it count as tied, and ties go to a
    converged report first, then to the lowest start index. ``extra_starts`` are appended after
    the configured ones, e.g. a warm start carried over from a smaller box.
    """
    if box.count < 2:
        raise DegenerateInputError("single-point box: the off-diagonal sum is empty")
    if kernel is None:
        kernel = build_kernel(params, box)
    starts = initial_potentials(box, params.s, config)
    starts += [np.asarray(x, float).reshape(box.shape) for x in extra_starts or []]
    if config.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            reports = list(pool.map(lambda a: _ascend(params, kernel, a[1], config, a[0]),
                                    enumerate(starts)))
    else:
        reports = [_ascend(params, kernel, g0, config, k) for k, g0 in enumerate(starts)]
    top = max(rep.C_estimate for rep in reports)
    # among starts tied with the best value, prefer a certified one, then the earliest
    tied = [rep for rep in reports if rep.C_estimate >= top * (1 - config.tol_objective)]
    return min(tied, key=lambda rep: (not rep.converged, rep.start_index))


def _power_iteration(matvec, x0: np.ndarray, tol: float, max_iter: int) -> float:
    """Perron root of a symmetric nonnegative operator from a positive start.

    Iterates on A + sigma I with sigma = rho0 / 2, where rho0 is the Rayleigh
    quotient at the start; this separates the Perron root from a possible
    eigenvalue near -rho without reordering the spectrum.
    """
    x = x0 / np.linalg.norm(x0)
    y = matvec(x)
    rho = float(x @ y)
    sigma = 0.5 * rho
    for _ in range(max_iter):
        z = y + sigma * x
        x_new = z / np.linalg.norm(z)
        y = matvec(x_new)
        rho_new = float(x_new @ y)
        done = abs(rho_new - rho) <= tol * abs(rho_new)
        x, rho = x_new, rho_new
        if done and np.linalg.norm(y - rho * x) <= np.sqrt(tol) * abs(rho):
            return rho
    return rho


def oracle_spectral(box: LatticeBox, kernel: Kernel, tol: float = 1e-14,
                    max_iter: int = 200000) -> float:
    """Largest eigenvalue of the dense kernel matrix = C_{2,2,alpha} on ``box``."""
    if box.count > DENSE_CAP:
        raise ValueError(f"dense oracle limited to {DENSE_CAP} points, got {box.count}")
    if box.shape != kernel.box.shape:
        raise ValueError("kernel does not match box")
    A = kernel.dense
    return _power_iteration(lambda v: A @ v, np.ones(box.count), tol, max_iter)


def oracle_multistart(params: ProblemParams, box: LatticeBox,
                      config: SolverConfig = SolverConfig(starts=64)) -> float:
    """Max C over >= 64 random starts plus every spike and the uniform start."""
    if box.count > MULTISTART_CAP:
        raise ValueError(f"multistart oracle limited to {MULTISTART_CAP} points, got {box.count}")
    if box.count < 2:
        raise DegenerateInputError("single-point box: the off-diagonal sum is empty")
    config = replace(config, starts=max(config.starts, 64))
    extra = [np.eye(box.count)[k] for k in range(box.count)]
    extra.append(np.ones(box.count))
    return solve_truncated(params, box, config, extra_starts=extra).C_estimate
