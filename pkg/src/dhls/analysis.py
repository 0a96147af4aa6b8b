"""Sweeps over truncation radius N and convergence diagnostics on the results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .kernel import Backend, Kernel, apply_T_fft, apply_T_direct
from .lattice import Field, LatticeBox, Mode, ProblemParams, lp_norm, recenter
from .solver import SolverConfig, _power_iteration, solve_truncated

MONOTONE_SLACK = 1e-8
# sequence-convergence criterion: last WINDOW terms within REL_TOL (relative)
WINDOW = 3
REL_TOL = 1e-3
# concentration surrogate
FLOOR_FRACTION = 0.5
SLOPE_MIN = -1e-3


@dataclass
class SweepRecord:
    N: int
    C_N: float
    max_f: float
    argmax_f: tuple[int, ...]
    max_g: float
    argmax_g: tuple[int, ...]
    iterations: int
    el_residual: float
    wall_time: float
    converged: bool = True


@dataclass
class SweepTable:
    params: ProblemParams
    records: list[SweepRecord]
    extrapolated_C: float | None = None
    concentration_floor_f: float = math.nan
    concentration_floor_g: float = math.nan
    # l^r (f) and l^s (g) distances between consecutive recentered maximizers
    distances_f: list[float] = field(default_factory=list)
    distances_g: list[float] = field(default_factory=list)
    monotonicity_violations: list[int] = field(default_factory=list)
    recentered_f: list[Field] = field(default_factory=list, repr=False)
    recentered_g: list[Field] = field(default_factory=list, repr=False)

    @property
    def Ns(self) -> list[int]:
        return [rec.N for rec in self.records]

    @property
    def C(self) -> np.ndarray:
        return np.array([rec.C_N for rec in self.records])

    @property
    def limit_pair(self) -> tuple[Field, Field] | None:
        """Last recentered iterate, the finite stand-in for the limiting maximizer."""
        if not self.recentered_f:
            return None
        return self.recentered_f[-1], self.recentered_g[-1]


def _common_box(fields: Sequence[Field]) -> LatticeBox:
    box = fields[0].box
    for f in fields[1:]:
        box = box.union(f.box)
    return box


def sweep(params: ProblemParams, N_list: Sequence[int], config: SolverConfig = SolverConfig(),
          warm_start: bool = True) -> SweepTable:
    """Solve on the cubes [-N, N]^dim for each N and assemble a SweepTable.

    With ``warm_start`` the previous maximizer, zero-extended, is added as an
    extra start; its value is already C_{N_prev}, so C_N cannot drop below it.
    """
    N_list = [int(N) for N in N_list]
    if not N_list:
        raise ValueError("N_list is empty")
    if any(N < 1 for N in N_list):
        raise ValueError("every N must be >= 1")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError(f"N_list must be strictly increasing, got {N_list}")

    records, rf, rg = [], [], []
    prev = None
    for N in N_list:
        box = LatticeBox.cube(params.dim, N)
        extra = [prev.g.on_box(box).values] if (warm_start and prev is not None) else None
        rep = solve_truncated(params, box, config, extra_starts=extra)
        prev = rep
        f_bar, g_bar, _ = recenter(rep.f, rep.g)
        rf.append(f_bar)
        rg.append(g_bar)
        records.append(SweepRecord(N, rep.C_estimate, rep.f.max(), rep.f.argmax(), rep.g.max(),
                                   rep.g.argmax(), rep.iterations, rep.el_residual,
                                   rep.wall_time, rep.converged))

    table = SweepTable(params, records, recentered_f=rf, recentered_g=rg)
    big = _common_box(rf + rg)
    F = [f.on_box(big).values for f in rf]
    G = [g.on_box(big).values for g in rg]
    table.distances_f = [lp_norm(b - a, params.r) for a, b in zip(F, F[1:])]
    table.distances_g = [lp_norm(b - a, params.s) for a, b in zip(G, G[1:])]
    table.monotonicity_violations = [
        records[k + 1].N for k in range(len(records) - 1)
        if records[k + 1].C_N < records[k].C_N - MONOTONE_SLACK
    ]
    table.concentration_floor_f = min(rec.max_f for rec in records)
    table.concentration_floor_g = min(rec.max_g for rec in records)
    return table


@dataclass(frozen=True)
class ConcentrationResult:
    floor_f: float
    floor_g: float
    passed: bool
    slope_f: float
    slope_g: float

    def __iter__(self):
        return iter((self.floor_f, self.floor_g, self.passed))


def _slope(x, y) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


def concentration_check(table: SweepTable) -> ConcentrationResult:
    """Surrogate for a uniform positive lower bound on max f^N, max g^N.

    Passes when both floors are at least half the first record's max entry
    and neither sequence of max entries has a least-squares slope in N
    below -1e-3.
    """
    if table.params.mode is not Mode.SUPERCRITICAL:
        raise ValueError("concentration needs the strict supercritical gap")
    recs = table.records
    if len(recs) < 3:
        raise ValueError(f"concentration_check needs >= 3 records, got {len(recs)}")
    Ns = [rec.N for rec in recs]
    mf = [rec.max_f for rec in recs]
    mg = [rec.max_g for rec in recs]
    floor_f, floor_g = min(mf), min(mg)
    sf, sg = _slope(Ns, mf), _slope(Ns, mg)
    passed = (floor_f >= FLOOR_FRACTION * mf[0] and floor_g >= FLOOR_FRACTION * mg[0]
              and sf >= SLOPE_MIN and sg >= SLOPE_MIN)
    return ConcentrationResult(floor_f, floor_g, passed, sf, sg)


@dataclass(frozen=True)
class Extrapolation:
    C_inf: float
    a: float
    b: float
    rss: float


def _fit_power_tail(N, C, b) -> tuple[float, float, float]:
    # C = C_inf - a N^-b, linear in (C_inf, a) for fixed b
    X = np.column_stack([np.ones_like(N), -(N ** -b)])
    (c_inf, a), *_ = np.linalg.lstsq(X, C, rcond=None)
    if a < 0:
        c_inf, a = float(C.mean()), 0.0
    rss = float(np.sum((c_inf - a * N ** -b - C) ** 2))
    return float(c_inf), float(a), rss


def fit_limit(Ns: Sequence[float], C: Sequence[float]) -> Extrapolation:
    """Least-squares fit of C_N = C_inf - a N^-b with a >= 0, b in [0.1, 4]."""
    N = np.asarray(Ns, float)
    C = np.asarray(C, float)
    if len(N) < 3:
        raise ValueError("need >= 3 points to fit C_inf - a N^-b")
    if np.any(np.diff(C) < -MONOTONE_SLACK):
        raise ValueError(f"tail is not nondecreasing: increments {np.diff(C)}")
    grid = np.linspace(0.1, 4.0, 391)
    rss = [_fit_power_tail(N, C, b)[2] for b in grid]
    k = int(np.argmin(rss))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    best_b = grid[k]
    if hi > lo:
        opt = minimize_scalar(lambda b: _fit_power_tail(N, C, b)[2], bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10})
        if opt.fun <= rss[k]:
            best_b = float(opt.x)
    c_inf, a, r = _fit_power_tail(N, C, best_b)
    # the limit is a supremum of the observed values
    return Extrapolation(max(c_inf, float(C.max())), a, best_b, r)


def extrapolate_C(table: SweepTable, tail: int | None = None) -> float:
    """Estimate lim C_N from the last ``tail`` records (all by default)."""
    recs = table.records if tail is None else table.records[-tail:]
    fit = fit_limit([rec.N for rec in recs], [rec.C_N for rec in recs])
    table.extrapolated_C = fit.C_inf
    return fit.C_inf


@dataclass(frozen=True)
class BrezisLiebResult:
    hypothesis: bool
    conclusion: bool
    norm_gaps: tuple[float, ...]
    distances: tuple[float, ...]

    @property
    def holds(self) -> bool:
        return (not self.hypothesis) or self.conclusion

    @property
    def mass_escaped(self) -> bool:
        return not self.hypothesis


def brezis_lieb_report(fields: Sequence[Field], limit: Field, p: float) -> BrezisLiebResult:
    """Check: norms converge to |limit|_p  =>  |f^k - limit|_p -> 0.

    Convergence of a finite sequence means its last WINDOW terms lie within
    REL_TOL * |limit|_p of the target. Fields are compared on a common box
    after zero-extension.
    """
    if not fields:
        raise ValueError("empty sequence")
    box = _common_box(list(fields) + [limit])
    L = limit.on_box(box).values
    ref = lp_norm(L, p)
    scale = ref if ref > 0 else 1.0
    norm_gaps = tuple(abs(lp_norm(f.values, p) - ref) / scale for f in fields)
    dists = tuple(lp_norm(f.on_box(box).values - L, p) / scale for f in fields)
    hyp = all(x <= REL_TOL for x in norm_gaps[-WINDOW:])
    concl = all(x <= REL_TOL for x in dists[-WINDOW:])
    return BrezisLiebResult(hyp, concl, norm_gaps, dists)


def brezis_lieb_check(fields: Sequence[Field], limit: Field, p: float) -> bool:
    return brezis_lieb_report(fields, limit, p).holds


@dataclass
class CriticalTable:
    dim: int
    Ns: list[int]
    lambdas: list[float]

    @property
    def increments(self) -> list[tuple[int, float]]:
        """(N, lambda_2N - lambda_N) for every consecutive doubling in the table."""
        out = []
        for (n1, l1), (n2, l2) in zip(zip(self.Ns, self.lambdas), zip(self.Ns[1:], self.lambdas[1:])):
            if n2 == 2 * n1:
                out.append((n1, l2 - l1))
        return out

    @property
    def ratios(self) -> list[float]:
        return [lam / math.log(N) if N > 1 else math.nan for N, lam in zip(self.Ns, self.lambdas)]

    @property
    def offsets(self) -> list[float]:
        """lambda_N - 2 ln N (the O(1) term for dim 1)."""
        return [lam - 2 * math.log(N) for N, lam in zip(self.Ns, self.lambdas)]

    def __iter__(self):
        return iter(zip(self.Ns, self.lambdas))


def sphere_area(n: int) -> float:
    """Measure of the unit sphere S^(n-1) in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def critical_box(n: int, N: int) -> LatticeBox:
    # dim 1 uses the classical sums over 1..N
    return LatticeBox.interval(1, N) if n == 1 else LatticeBox.cube(n, N)


def critical_growth(n: int, N_list: Sequence[int], config: SolverConfig | None = None,
                    params: ProblemParams | None = None, tol: float = 1e-12,
                    max_iter: int = 20000) -> CriticalTable:
    """Top eigenvalue lambda_N of the 1/|i-j|^n kernel matrix, r = s = 2, alpha = 0."""
    if params is None:
        params = ProblemParams(n, 2.0, 2.0, 0.0, Mode.CRITICAL_BENCHMARK)
    if (params.mode is not Mode.CRITICAL_BENCHMARK or params.alpha != 0
            or params.r != 2 or params.s != 2 or params.dim != n):
        raise ValueError("critical_growth requires critical mode with r = s = 2, alpha = 0")
    backend = config.backend if config is not None else Backend.FAST
    apply = apply_T_fft if backend is Backend.FAST else apply_T_direct
    lams = []
    for N in N_list:
        box = critical_box(n, int(N))
        kernel = Kernel(box, float(n))

        def matvec(x, box=box, kernel=kernel):
            return apply(kernel, Field(box, x.reshape(box.shape))).flat

        lams.append(_power_iteration(matvec, np.ones(box.count), tol, max_iter))
    return CriticalTable(n, [int(N) for N in N_list], lams)
