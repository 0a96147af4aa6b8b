"""Command-line front end: ``dhls {solve,sweep,critical,verify}``.

Exit codes: 0 success, 1 invalid input, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import reporting
from .analysis import critical_growth, sweep
from .kernel import Backend
from .lattice import DegenerateInputError, LatticeBox, Mode, ProblemParams
from .solver import SolverConfig, solve_truncated
from .verify import corrupted_kernel, format_results, run_suite
from .kernel import build_kernel

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2
MIN_EXPONENT = 1.05


class InvalidInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInput(message)


def _n_list(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InvalidInput(f"--N-list must be comma-separated integers, got {text!r}")
    if not out:
        raise InvalidInput("--N-list is empty")
    return out


def _n_geom(text: str) -> list[int]:
    try:
        start, factor, count = (int(t) for t in text.split(":"))
    except ValueError:
        raise InvalidInput(f"--N-geom must be start:factor:count, got {text!r}")
    if start < 1 or factor < 2 or count < 1:
        raise InvalidInput("--N-geom needs start >= 1, factor >= 2, count >= 1")
    return [start * factor ** k for k in range(count)]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InvalidInput(f"not a boolean: {text!r}")


# config-file keys, their converters and built-in defaults
OPTIONS = {
    "dim": (int, 1),
    "r": (float, None),
    "s": (float, None),
    "alpha": (float, None),
    "mode": (str, "supercritical"),
    "radius": (int, None),
    "tol": (float, 1e-12),
    "tol_residual": (float, 1e-8),
    "max_iter": (int, 10000),
    "starts": (int, 8),
    "seed": (int, 0),
    "backend": (str, "direct"),
    "threads": (int, None),
    "out": (str, None),
    "format": (str, "csv"),
    "N_list": (_n_list, None),
    "N_geom": (_n_geom, None),
    "emit_plot": (_bool, False),
}


def read_config(path: str | Path) -> dict:
    """Parse ``key = value`` lines with ``#`` comments; unknown keys are errors."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc.strerror}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise InvalidInput(f"{path}:{lineno}: unknown config key {key!r}")
        conv = OPTIONS[key][0]
        try:
            out[key] = conv(value)
        except ValueError:
            raise InvalidInput(f"{path}:{lineno}: bad value for {key}: {value!r}")
    return out


def _resolve(args) -> argparse.Namespace:
    """Command line > config file > built-in defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key, (_, default) in OPTIONS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg.get(key, default))
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    return args


def _add_common(p: argparse.ArgumentParser, problem: bool = True):
    p.add_argument("--config", help="key = value file; flags take precedence")
    if problem:
        p.add_argument("--dim", type=int)
        p.add_argument("--r", type=float)
        p.add_argument("--s", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--mode", choices=["supercritical", "critical", "truncated"])
    p.add_argument("--tol", type=float, help="relative change of J at which to stop")
    p.add_argument("--tol-residual", dest="tol_residual", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--backend", choices=["direct", "fast"])
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=["csv", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dhls", description="Best constants of the discrete HLS inequality.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="best constant on one box [-radius, radius]^dim")
    _add_common(p)
    p.add_argument("--radius", type=int)

    p = sub.add_parser("sweep", help="best constants over a list of radii")
    _add_common(p)
    p.add_argument("--N-list", dest="N_list", type=_n_list)
    p.add_argument("--N-geom", dest="N_geom", type=_n_geom)
    p.add_argument("--emit-plot", dest="emit_plot", action="store_const", const=True)

    p = sub.add_parser("critical", help="growth of the r = s = 2, alpha = 0 constant")
    p.add_argument("--config")
    p.add_argument("--dim", type=int)
    p.add_argument("--N-geom", dest="N_geom", type=_n_geom)
    p.add_argument("--N-list", dest="N_list", type=_n_list)
    p.add_argument("--backend", choices=["direct", "fast"])
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run the property and oracle suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-kernel", action="store_true", help=argparse.SUPPRESS)
    return parser


def _params(args) -> ProblemParams:
    for name in ("r", "s", "alpha"):
        if getattr(args, name) is None:
            raise InvalidInput(f"--{name} is required")
    if args.r < MIN_EXPONENT or args.s < MIN_EXPONENT:
        raise InvalidInput(f"r and s must be >= {MIN_EXPONENT}")
    try:
        return ProblemParams(args.dim, args.r, args.s, args.alpha, Mode(args.mode))
    except ValueError as exc:
        raise InvalidInput(str(exc))


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(args.tol, args.tol_residual, args.max_iter, args.starts, args.seed,
                            Backend(args.backend), args.threads)
    except ValueError as exc:
        raise InvalidInput(str(exc))


def _write(path, text: str):
    Path(path).write_text(text, encoding="utf-8")


def cmd_solve(args) -> int:
    args = _resolve(args)
    params = _params(args)
    config = _config(args)
    if args.radius is None:
        raise InvalidInput("--radius is required")
    if args.radius < 1:
        raise InvalidInput("degenerate box: radius must be >= 1 (single-point box has C = 0)")
    box = LatticeBox.cube(params.dim, args.radius)
    rep = solve_truncated(params, box, config)
    rec = reporting.SweepRecord(args.radius, rep.C_estimate, rep.f.max(), rep.f.argmax(),
                                rep.g.max(), rep.g.argmax(), rep.iterations, rep.el_residual,
                                rep.wall_time, rep.converged)
    print(f"C = {reporting.fmt(rep.C_estimate)}")
    print(f"el_residual = {rep.el_residual:.3e}")
    print(f"converged = {rep.converged} (start {rep.start_index}, {rep.iterations} iterations)")
    if args.out:
        if args.format == "json":
            diag = {"start_index": rep.start_index, "J_history_length": len(rep.J_history)}
            _write(args.out, reporting.report_json(
                params.to_dict(), config.to_dict(), [rec], diag,
                f=rep.f.flat.tolist(), g=rep.g.flat.tolist(),
                box={"lo": list(box.lo), "hi": list(box.hi)}))
        else:
            _write(args.out, reporting.sweep_csv([rec]))
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def _N_values(args) -> list[int]:
    if args.N_list is not None and args.N_geom is not None:
        raise InvalidInput("give either --N-list or --N-geom, not both")
    Ns = args.N_list if args.N_list is not None else args.N_geom
    if not Ns:
        raise InvalidInput("an N list is required (--N-list or --N-geom)")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise InvalidInput("N values must be strictly increasing")
    if Ns[0] < 1:
        raise InvalidInput("N values must be >= 1")
    return list(Ns)


def cmd_sweep(args) -> int:
    args = _resolve(args)
    params = _params(args)
    config = _config(args)
    Ns = _N_values(args)
    table = sweep(params, Ns, config)
    diag = reporting.sweep_diagnostics(table)
    csv_text = reporting.sweep_csv(table.records)
    for rec in table.records:
        print(f"N={rec.N:<6d} C_N={reporting.fmt(rec.C_N)}  max_f={rec.max_f:.6f}  "
              f"residual={rec.el_residual:.2e}")
    if table.monotonicity_violations:
        print(f"monotonicity violated at N in {table.monotonicity_violations}")
    if args.out:
        if args.format == "json":
            _write(args.out, reporting.report_json(params.to_dict(), config.to_dict(),
                                                   table.records, diag))
        else:
            _write(args.out, csv_text)
        if args.emit_plot:
            data = Path(args.out).with_suffix(".data.csv") if args.format == "json" else Path(args.out)
            if args.format == "json":
                _write(data, csv_text)
            _write(Path(args.out).with_suffix(".plt"),
                   reporting.plot_script(data.name, f"sweep r={params.r} s={params.s} "
                                                    f"alpha={params.alpha} dim={params.dim}"))
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK if all(rec.converged for rec in table.records) else EXIT_NONCONVERGED


def cmd_critical(args) -> int:
    cfg = read_config(args.config) if args.config else {}
    unknown = set(cfg) - {"dim", "N_geom", "N_list", "backend", "out"}
    if unknown:
        raise InvalidInput(f"config keys not used by critical: {sorted(unknown)}")
    for key in ("dim", "N_geom", "N_list", "backend", "out"):
        if getattr(args, key) is None:
            setattr(args, key, cfg.get(key))
    if args.dim is None:
        args.dim = 1
    if args.dim < 1:
        raise InvalidInput("--dim must be >= 1")
    Ns = _N_values(args)
    lo = 2 if args.dim == 1 else 1
    if Ns[0] < lo:
        raise InvalidInput(f"N must be >= {lo} in dimension {args.dim}")
    config = SolverConfig(backend=Backend(args.backend or "fast"))
    table = critical_growth(args.dim, Ns, config)
    text = reporting.critical_csv(table)
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    if args.dim == 1:
        target = 2 * math.log(2)
        for N, inc in table.increments:
            print(f"# lambda_{2 * N} - lambda_{N} = {inc:.6f}  (2 ln 2 = {target:.6f})")
    else:
        target = 2 * math.pi ** (args.dim / 2) / math.gamma(args.dim / 2)
        for N, ratio in zip(table.Ns, table.ratios):
            print(f"# N={N}: lambda_N / ln N = {ratio:.6f}  (|S^{args.dim - 1}| = {target:.6f})")
    return EXIT_OK


def cmd_verify(args) -> int:
    factory = corrupted_kernel if args.corrupt_kernel else build_kernel
    results = run_suite(args.seed, factory)
    sys.stdout.write(format_results(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "critical": cmd_critical, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (InvalidInput, DegenerateInputError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"dhls: error: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
