"""Command-line front end: evolve / talbot / convergence / diagnostics.

Runs are configured through flags or a JSON config file (flags win), emit
plot-ready CSV data plus a manifest that records the effective config, the
eigendecomposition count and the sha256 digest of every file written, so a
manifest alone suffices to reproduce a run.

Exit codes: 0 ok, 1 check failure, 2 config error.
"""

from __future__ import annotations

import argparse
import ast
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as diag
from .propagator import find_kappa_zero
from .scheme import SCHEDULE_KINDS, SchemeConfig, make_schedule, run_scheme
from .spectral import InitialProfile, analyze_profile, synthesize

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class CheckFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- parsing

_TIME_NAMES = {"pi": math.pi, "sqrt2": math.sqrt(2.0)}


def parse_time_expr(expr) -> float:
    """Parse a time value; strings may use pi, sqrt2, sqrt() and arithmetic."""
    if isinstance(expr, (int, float)):
        return float(expr)
    try:
        node = ast.parse(str(expr), mode="eval").body
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse time {expr!r}") from exc

    def ev(n):
        if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)):
            return float(n.value)
        if isinstance(n, ast.Name) and n.id in _TIME_NAMES:
            return _TIME_NAMES[n.id]
        if isinstance(n, ast.UnaryOp) and isinstance(n.op, (ast.USub, ast.UAdd)):
            v = ev(n.operand)
            return -v if isinstance(n.op, ast.USub) else v
        if isinstance(n, ast.BinOp):
            a, b = ev(n.left), ev(n.right)
            if isinstance(n.op, ast.Add):
                return a + b
            if isinstance(n.op, ast.Sub):
                return a - b
            if isinstance(n.op, ast.Mult):
                return a * b
            if isinstance(n.op, ast.Div):
                return a / b
        if isinstance(n, ast.Call) and isinstance(n.func, ast.Name) and n.func.id == "sqrt":
            return math.sqrt(ev(n.args[0]))
        raise ConfigError(f"unsupported expression in time {expr!r}")

    return ev(node)


def parse_profile(spec) -> InitialProfile:
    """Parse "square-wave", "single-mode:k0=3,amplitude=0.2", etc."""
    if isinstance(spec, dict):
        return InitialProfile(spec["kind"], {k: v for k, v in spec.items() if k != "kind"})
    kind, _, rest = str(spec).partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise ConfigError(f"bad profile parameter {item!r}")
            try:
                params[key.strip()] = ast.literal_eval(val)
            except (ValueError, SyntaxError) as exc:
                raise ConfigError(f"bad profile parameter {item!r}") from exc
    try:
        return InitialProfile(kind, params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_schedule(spec, K: int):
    try:
        if isinstance(spec, (list, tuple)):
            return make_schedule("custom", K, list(spec))
        kind, _, rest = str(spec).partition(":")
        if kind == "custom":
            values = [int(v) for v in rest.split(",")]
            return make_schedule("custom", K, values)
        if kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule {kind!r}")
        return make_schedule(kind, K)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad schedule {spec!r}: {exc}") from exc


def max_workers() -> int:
    """Parallelism cap from LAXFLOW_THREADS (>= 1)."""
    raw = os.environ.get("LAXFLOW_THREADS", "")
    try:
        return max(1, int(raw)) if raw else max(1, os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"LAXFLOW_THREADS={raw!r} is not an integer")


# ---------------------------------------------------------------- output

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def write_manifest(outdir: Path, config: dict, extra: dict, files) -> Path:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "laxflow_version": __version__,
        "config": config,
        **extra,
        "files": {f.name: _sha256(f) for f in files},
    }
    path = outdir / "manifest.json"
    tmp = outdir / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)
    return path


def _resolve_times(args) -> np.ndarray:
    if getattr(args, "times", None):
        return np.array([parse_time_expr(t) for t in args.times.split(";")])
    T = float(args.T)
    return np.linspace(-T, T, int(args.grid_points))


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def cmd_evolve(args) -> int:
    out = _outdir(args)
    K = int(args.K)
    times = _resolve_times(args)
    schedule = parse_schedule(args.schedule, K)
    profile = parse_profile(args.profile)
    cfg = SchemeConfig(args.equation, schedule, times, profile,
                       override_focusing_threshold=args.override_focusing_threshold)
    t0 = time.perf_counter()
    result = run_scheme(cfg)
    wall = time.perf_counter() - t0

    rows = []
    for i, t in enumerate(result.times):
        for k in range(K):
            c = result.coeffs[i, k]
            rows.append((float(t), k, float(c.real), float(c.imag)))
    write_csv(out / "coefficients.csv", ("t", "k", "re", "im"), rows)

    xs = -np.pi + 2.0 * np.pi * np.arange(2 * K) / (2 * K)
    sample_rows = []
    for t in result.times:
        fld = result.real_spectrum(t) if args.equation == "BO" else result.hardy(t)
        vals = synthesize(fld, xs)
        for x, v in zip(xs, vals):
            sample_rows.append((float(t), float(x), float(v.real)))
    write_csv(out / "samples.csv", ("t", "x", "value"), sample_rows)

    files = [out / "coefficients.csv", out / "samples.csv"]
    write_manifest(out, _config_echo(args), {
        "decompositions": result.decompositions,
        "wall_time_s": wall,
        "l2_preserving_schedule": schedule.l2_preserving,
        "n0_zero": bool(schedule.values[0] == 0),
        "data_digest": result.data_digest,
    }, files)
    return 0


TALBOT_TIMES = ("pi/2", "pi/3", "pi/6", "sqrt2*pi")


def cmd_talbot(args) -> int:
    if args.equation != "BO":
        raise ConfigError("the Talbot experiment is defined for the BO equation")
    out = _outdir(args)
    K = int(args.K)
    time_exprs = args.times.split(";") if args.times else list(TALBOT_TIMES)
    times = np.array([parse_time_expr(t) for t in time_exprs])
    profile = parse_profile(args.profile)

    t0 = time.perf_counter()
    nonlinear = run_scheme(SchemeConfig("BO", parse_schedule(args.schedule, K), times, profile))
    linear = run_scheme(SchemeConfig("BO", make_schedule("linear-case", K), times, profile))
    wall = time.perf_counter() - t0

    xs = -np.pi + 2.0 * np.pi * np.arange(2 * K) / (2 * K)
    files = []
    for i, t in enumerate(times):
        for tag, result in (("nonlinear", nonlinear), ("linear", linear)):
            vals = synthesize(result.real_spectrum(t), xs)
            path = out / f"talbot_{i}_{tag}.csv"
            write_csv(path, ("x", "value"),
                      [(float(x), float(v.real)) for x, v in zip(xs, vals)])
            files.append(path)
    for tag, result in (("nonlinear", nonlinear), ("linear", linear)):
        rows = []
        for i, t in enumerate(times):
            for k in range(K):
                c = result.coeffs[i, k]
                rows.append((float(t), k, float(c.real), float(c.imag)))
        path = out / f"coefficients_{tag}.csv"
        write_csv(path, ("t", "k", "re", "im"), rows)
        files.append(path)

    write_manifest(out, _config_echo(args, times=time_exprs), {
        "decompositions": nonlinear.decompositions + linear.decompositions,
        "wall_time_s": wall,
        "panels": len(times),
    }, files)
    return 0


def cmd_convergence(args) -> int:
    out = _outdir(args)
    Ks = [int(k) for k in args.Ks.split(",")]
    profile = parse_profile(args.profile)
    t0 = time.perf_counter()
    try:
        table = diag.run_convergence_study(
            profile, args.equation, Ks, args.schedule, float(args.T),
            int(args.grid_points), int(args.kref), check=False,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    wall = time.perf_counter() - t0
    slope = diag.fit_rate(table) if len(table.rows) >= 4 else None

    write_csv(out / "table.csv",
              ("K", "schedule", "error", "norm_diff", "wall_time_s", "decompositions"),
              [(r.K, r.kind, r.error, r.norm_diff, r.wall_time, r.decompositions)
               for r in table.rows])
    monotone = all(b.error <= a.error + 1e-12 for a, b in zip(table.rows, table.rows[1:]))
    norm_bounded = all(r.norm_diff <= r.error + 1e-12 for r in table.rows)
    summary = {
        "slope": slope,
        "monotone": monotone,
        "norm_diff_bounded_by_error": norm_bounded,
        "K_ref": table.K_ref,
        "T": table.T,
        "equation": table.equation,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files = [out / "table.csv", out / "summary.json"]
    write_manifest(out, _config_echo(args), {"wall_time_s": wall, "checks": summary}, files)
    return 0 if (monotone and norm_bounded) else 1


def cmd_diagnostics(args) -> int:
    out = _outdir(args)
    M = int(args.M)
    eq_short = "BO" if args.equation == "BO" else "CCM"
    profile = parse_profile(args.profile)
    u0 = analyze_profile(profile, M, hardy=(eq_short == "CCM"))
    kappas = [float(k) for k in args.kappas.split(",")]
    ns = [2**e for e in range(0, int(math.log2(M)) + 1)]

    t0 = time.perf_counter()
    # the three suites are independent; LAXFLOW_THREADS caps the parallelism
    with ThreadPoolExecutor(max_workers=min(3, max_workers())) as pool:
        fut_bounds = pool.submit(diag.run_bound_suite, u0, args.equation, M,
                                 kappas, ns, seed=int(args.seed))
        fut_res = pool.submit(diag.run_resolvent_convergence, u0, args.equation, M)
        fut_sweep = pool.submit(diag.run_propagator_sweep, u0, args.equation, M,
                                float(args.T))
        reports = fut_bounds.result()
        res_rows = fut_res.result()
        sweep_failed = False
        try:
            sweep_rows = fut_sweep.result()
        except RuntimeError:
            sweep_rows, sweep_failed = [], True
    if args.corrupt_bounds:
        # harness self-test: a zeroed bound must be reported as a failure
        reports = [diag.BoundReport(r.name, r.params, r.measured, 0.0) for r in reports]
    wall = time.perf_counter() - t0

    write_csv(out / "bounds.csv", ("name", "n", "kappa", "measured", "bound", "pass"),
              [(r.name, r.params.get("n", ""), r.params.get("kappa", ""),
                r.measured, r.bound, r.passed) for r in reports])
    write_csv(out / "resolvent.csv", ("n", "measured", "bound", "pass"),
              [(r.n, r.measured, r.bound, r.passed) for r in res_rows])
    write_csv(out / "propagator_sweep.csv", ("n", "sup_error"),
              [(n, e) for n, e in sweep_rows])

    kz = find_kappa_zero(u0, eq_short, M)
    all_pass = (all(r.passed for r in reports)
                and all(r.passed for r in res_rows)
                and not sweep_failed)
    summary = {
        "bounds_pass": all(r.passed for r in reports),
        "resolvent_pass": all(r.passed for r in res_rows),
        "propagator_sweep_pass": not sweep_failed,
        "kappa0": kz.value,
        "kappa0_method": kz.method,
        "failed": sorted({r.name for r in reports if not r.passed}),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files = [out / "bounds.csv", out / "resolvent.csv",
             out / "propagator_sweep.csv", out / "summary.json"]
    write_manifest(out, _config_echo(args), {"wall_time_s": wall, "checks": summary}, files)
    return 0 if all_pass else 1


# ---------------------------------------------------------------- wiring

def _config_echo(args, **overrides) -> dict:
    echo = {k: v for k, v in vars(args).items()
            if k not in ("func", "config") and v is not None}
    echo.update(overrides)
    echo["schema_version"] = SCHEMA_VERSION
    return echo


def _apply_config_file(args, argv) -> None:
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {data.get('schema_version')!r}")
    passed = {a.split("=", 1)[0].lstrip("-").replace("-", "_")
              for a in argv if a.startswith("--")}
    for key, val in data.items():
        if key in ("schema_version", "command"):
            continue
        if not hasattr(args, key):
            raise ConfigError(f"unknown config field {key!r}")
        # explicit CLI flags win over the config file
        if key not in passed:
            setattr(args, key, val)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="laxflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, K_default):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--equation", default="BO",
                        choices=["BO", "CCM-focusing", "CCM-defocusing"])
        sp.add_argument("--K", default=K_default, type=int)
        sp.add_argument("--profile", default="square-wave")
        sp.add_argument("--out", default="laxflow-out")
        sp.add_argument("--seed", default=0, type=int)
        sp.add_argument("--T", default=1.0)
        sp.add_argument("--grid-points", dest="grid_points", default=41, type=int)
        sp.add_argument("--times", help="semicolon-separated, e.g. 'pi/2;sqrt2*pi'")

    ev = sub.add_parser("evolve", help="run the scheme and emit coefficients/samples")
    common(ev, 64)
    ev.add_argument("--schedule", default="constant")
    ev.add_argument("--override-focusing-threshold", action="store_true")
    ev.set_defaults(func=cmd_evolve)

    tb = sub.add_parser("talbot", help="square-wave Talbot panels, linear vs nonlinear")
    common(tb, 1 << 10)
    tb.add_argument("--schedule", default="half-staircase")
    tb.set_defaults(func=cmd_talbot)

    cv = sub.add_parser("convergence", help="error table against a reference run")
    common(cv, 128)
    cv.add_argument("--schedule", default="constant")
    cv.add_argument("--Ks", default="16,32,64,128")
    cv.add_argument("--kref", default=1024, type=int)
    cv.set_defaults(func=cmd_convergence)

    dg = sub.add_parser("diagnostics", help="operator-bound and convergence suites")
    common(dg, 128)
    dg.add_argument("--M", default=128, type=int)
    dg.add_argument("--kappas", default="1,10,100")
    dg.add_argument("--corrupt-bounds", action="store_true", help=argparse.SUPPRESS)
    dg.set_defaults(func=cmd_diagnostics)
    dg.set_defaults(profile="random-sobolev:s=1,seed=0,norm=1")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, argv)
        args.T = parse_time_expr(args.T)
        return args.func(args)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
