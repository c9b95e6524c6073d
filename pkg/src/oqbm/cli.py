"""Command-line entry point and scenario runner.

    oqbm run <config>
    oqbm preset <name> [<name> ...] [--out DIR] [--jobs N] [--t-end T]
    oqbm list-presets
    oqbm crosscheck <config>

Outputs go to ``--out``, then ``out.dir`` from the config, then
``$OQBM_OUT/<name>``, then ``./oqbm_out/<name>``. Exit status is 0 on success,
2 for configuration errors and 3 for numerical failures; a failed run still
writes its partial series and a manifest.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .config import Scenario, load_config, preset_scenario
from .cumulants import constraint_residual, evolve_cumulants, init_cumulants
from .errors import BlowUp, DegenerateAngle, DegenerateDistribution, GridTooNarrow, OQBMError, UnsupportedProfile
from .field import COMPONENTS, grid_moments, init_field
from .io import write_csv, write_manifest, write_snapshot
from .moments import MomentState, evolve_moments, init_moments
from .observables import stats_from_moments
from .pde import DIAGNOSTIC_COLUMNS, STAT_COLUMNS, PdeConfig, evolve
from .presets import get_preset, list_presets, preset_checksum

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
OBSERVABLE_COLUMNS = DIAGNOSTIC_COLUMNS + STAT_COLUMNS
CROSSCHECK_ORDER = 4
DEFAULT_ROOT = "oqbm_out"
# input-shaped failures detected only once the solver starts
_CONFIG_LIKE = (UnsupportedProfile, DegenerateAngle)


@dataclasses.dataclass
class RunReport:
    exit_code: int
    out_dir: str
    files: list
    manifest: dict
    error: str | None = None


def output_dir(scenario: Scenario, override: str | None = None) -> str:
    if override:
        return override
    if scenario.out_dir:
        return scenario.out_dir
    return os.path.join(os.environ.get("OQBM_OUT", DEFAULT_ROOT), scenario.name)


# -- pde -------------------------------------------------------------------


def _pde_config(s: Scenario, record_moments=-1):
    r = s.run
    return PdeConfig(dt=r.dt, t_end=r.t_end, snapshot_times=r.snapshots, safety=r.safety,
                     record_moments=record_moments, form=r.pde_form)


def _write_pde(directory, result, files):
    for snap in result.snapshots:
        files.append(write_snapshot(directory, snap))
    d = result.diagnostics
    if not d:
        return
    files.append(write_csv(os.path.join(directory, "diagnostics.csv"), DIAGNOSTIC_COLUMNS,
                           [d[c] for c in DIAGNOSTIC_COLUMNS]))
    files.append(write_csv(os.path.join(directory, "observables.csv"), OBSERVABLE_COLUMNS,
                           [d[c] for c in OBSERVABLE_COLUMNS]))


def _run_pde(s, directory, files, extra):
    field = init_field(s.grid, s.initial)
    try:
        result = evolve(field, s.coefficients, _pde_config(s))
    except (BlowUp, GridTooNarrow) as exc:
        if getattr(exc, "partial", None) is not None:
            _write_pde(directory, exc.partial, files)
            extra["dt_used"] = exc.partial.dt
        raise
    extra["dt_used"] = result.dt
    _write_pde(directory, result, files)


# -- moments -----------------------------------------------------------------


def _initial_moments(s: Scenario) -> MomentState:
    if s.initial.j == 2:
        return init_moments(s.run.n_trunc, s.initial)
    # other profiles take their initial moments from the grid quadrature
    field = init_field(s.grid, s.initial)
    return MomentState(s.run.n_trunc, grid_moments(field, s.run.n_trunc))


def moment_observables(times, moments, coeffs):
    """Observable columns (diagnostics schema plus standardized statistics) from a hierarchy run."""
    times = np.asarray(times, dtype=float)
    trace = moments[:, 0, 0]
    m2 = moments[:, 2, 0]
    expected = (coeffs.lambda_4 - coeffs.Delta_1) * trace - coeffs.lambda_bar_2 * m2
    rate = np.gradient(trace, times, edge_order=2) if len(times) >= 3 else np.zeros_like(trace)
    stats = np.full((len(times), 4), np.nan)
    for k in range(len(times)):
        try:
            stats[k] = stats_from_moments(moments[k, :5, 0])
        except DegenerateDistribution:
            pass
    cols = {
        "t": times, "trace": trace, "trace_rate_residual": rate - expected,
        "bloch_defect": np.full(len(times), np.nan), "min_rho_plus": np.full(len(times), np.nan),
        "variance": stats[:, 1], "c_i_integral": moments[:, 0, 3], "sigma_z": moments[:, 0, 1],
        "mean": stats[:, 0], "skewness": stats[:, 2], "excess_kurtosis": stats[:, 3],
    }
    return [cols[c] for c in OBSERVABLE_COLUMNS]


def _write_moments(directory, s, series, files):
    header, cols = ["t"], [series.times]
    for n in s.run.orders:
        for k, comp in enumerate(COMPONENTS):
            header.append(f"moment_{comp}_{n}")
            cols.append(series.moments[:, n, k])
    files.append(write_csv(os.path.join(directory, "moments.csv"), header, cols))
    files.append(write_csv(os.path.join(directory, "observables.csv"), OBSERVABLE_COLUMNS,
                           moment_observables(series.times, series.moments, s.coefficients)))


def _run_moments(s, directory, files, extra):
    state = _initial_moments(s)
    try:
        series = evolve_moments(state, s.coefficients, s.run.t_end, s.run.dt, s.run.moment_form, s.run.record_every)
    except BlowUp as exc:
        if exc.partial is not None:
            _write_moments(directory, s, exc.partial, files)
        raise
    _write_moments(directory, s, series, files)


# -- cumulants ---------------------------------------------------------------


def _write_cumulants(directory, s, series, files):
    names, data = series.columns()
    residual = constraint_residual(series.channel("x1"), series.chi, s.coefficients)
    residual = np.broadcast_to(np.asarray(residual, dtype=float), series.times.shape)
    path = os.path.join(directory, f"cumulants_{series.closure}.csv")
    files.append(write_csv(path, ["t", *names, "constraint_residual"], [series.times, *data.T, residual]))


def _run_cumulants(s, directory, files, extra):
    failures = []
    for closure in s.run.closures:
        state = init_cumulants(s.initial, s.coefficients.chi, closure)
        try:
            series = evolve_cumulants(state, s.coefficients, s.run.t_end, s.run.dt, s.run.record_every,
                                      form=s.run.cumulant_form)
        except BlowUp as exc:
            if exc.partial is not None:
                _write_cumulants(directory, s, exc.partial, files)
            extra.setdefault("blowup", {})[closure] = exc.time
            failures.append(exc)
            continue
        _write_cumulants(directory, s, series, files)
    if failures:
        raise failures[0]


# -- crosscheck --------------------------------------------------------------


def compare_moments(times_a, a, times_b, b):
    """Largest deviation of each moment channel, relative to that channel's peak.

    ``a`` and ``b`` have shape (T, n + 1, 4); ``b`` is interpolated onto
    ``times_a`` when the time bases differ. Returns an array (n + 1, 4).
    """
    a, b = np.asarray(a), np.asarray(b)
    if len(times_a) != len(times_b) or not np.allclose(times_a, times_b, rtol=0, atol=1e-9):
        resampled = np.empty((len(times_a), a.shape[1], 4))
        for n in range(a.shape[1]):
            for k in range(4):
                resampled[:, n, k] = np.interp(times_a, times_b, b[:, n, k])
        b = resampled
    peak = np.max(np.abs(b), axis=0)
    dev = np.max(np.abs(a - b[:, : a.shape[1]]), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(peak > 1e-12, dev / peak, dev)
    return rel


def _run_crosscheck(s, directory, files, extra):
    field = init_field(s.grid, s.initial)
    try:
        pde_result = evolve(field, s.coefficients, _pde_config(s, record_moments=CROSSCHECK_ORDER))
    except (BlowUp, GridTooNarrow) as exc:
        if getattr(exc, "partial", None) is not None:
            _write_pde(directory, exc.partial, files)
        raise
    _write_pde(directory, pde_result, files)
    extra["dt_used"] = pde_result.dt
    series = evolve_moments(_initial_moments(s), s.coefficients, s.run.t_end, pde_result.dt, s.run.moment_form)
    rel = compare_moments(pde_result.times, pde_result.moments, series.times, series.moments[:, : CROSSCHECK_ORDER + 1])
    header = ["n", *COMPONENTS]
    files.append(write_csv(os.path.join(directory, "crosscheck.csv"), header,
                           [np.arange(CROSSCHECK_ORDER + 1), *rel.T]))
    trace_scale = np.max(np.abs(pde_result.diagnostics["trace_rate_expected"]))
    extra["crosscheck"] = {
        "max_relative_deviation": float(rel.max()),
        "orders": CROSSCHECK_ORDER,
        "trace_rate_relative_residual": float(np.max(np.abs(pde_result.diagnostics["trace_rate_residual"]))
                                              / trace_scale) if trace_scale > 0 else 0.0,
    }


RUNNERS = {"pde": _run_pde, "moments": _run_moments, "cumulants": _run_cumulants, "crosscheck": _run_crosscheck}


def run_scenario(s: Scenario, out_dir: str | None = None, mode: str | None = None) -> RunReport:
    """Execute a scenario, write its files and manifest, and report the exit status."""
    mode = mode or s.mode
    directory = out_dir or output_dir(s)
    os.makedirs(directory, exist_ok=True)
    files, extra = [], {}
    start = time.perf_counter()
    code, error = EXIT_OK, None
    try:
        RUNNERS[mode](s, directory, files, extra)
    except _CONFIG_LIKE as exc:
        code, error = EXIT_CONFIG, f"{type(exc).__name__}: {exc}"
    except OQBMError as exc:
        code, error = EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - start
    manifest = {
        "tool": "oqbm", "version": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "mode": mode, "scenario": s.resolved(),
        "preset_checksum": preset_checksum(s.preset) if s.preset else None,
        "status": "ok" if code == EXIT_OK else "failed", "exit_code": code, "error": error,
        "wall_time_s": wall, "files": sorted(os.path.basename(f) for f in files), **extra,
    }
    files.append(write_manifest(directory, manifest))
    return RunReport(code, directory, files, manifest, error)


# -- command line ---------------------------------------------------------------


def _print_presets(out):
    for name in list_presets():
        p = get_preset(name)
        print(f"{name}  [{p['mode']}]  {p['description']}  (checksum {preset_checksum(name)})", file=out)
        coeffs = ", ".join(f"{k}={v:g}" for k, v in p["coefficients"].items())
        init = ", ".join(f"{k}={v}" for k, v in p["init"].items())
        run = ", ".join(f"{k}={v}" for k, v in p["run"].items())
        print(f"    coefficients: {coeffs}", file=out)
        print(f"    init: {init}; run: {run}", file=out)


def _run_preset(args):
    name, root, t_end = args
    s = preset_scenario(name)
    if t_end is not None:
        s = dataclasses.replace(s, run=dataclasses.replace(
            s.run, t_end=t_end, snapshots=tuple(t for t in s.run.snapshots if t <= t_end)))
    report = run_scenario(s, os.path.join(root, name))
    return name, report.exit_code, report.out_dir, report.error


def _summary(report: RunReport, out):
    status = "ok" if report.exit_code == EXIT_OK else f"failed ({report.error})"
    print(f"{report.manifest['scenario']['name']}: {status} -> {report.out_dir}", file=out)
    if "crosscheck" in report.manifest:
        cc = report.manifest["crosscheck"]
        print(f"    max relative moment deviation (n <= {cc['orders']}): {cc['max_relative_deviation']:.3e}", file=out)
        print(f"    trace-rate relative residual: {cc['trace_rate_relative_residual']:.3e}", file=out)


def build_parser():
    parser = argparse.ArgumentParser(prog="oqbm", description="Open quantum Brownian motion solvers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config file")
    run.add_argument("config")
    run.add_argument("--out", help="output directory")
    cross = sub.add_parser("crosscheck", help="run PDE and moment hierarchy and compare moments")
    cross.add_argument("config")
    cross.add_argument("--out", help="output directory")
    preset = sub.add_parser("preset", help="run registered figure presets")
    preset.add_argument("names", nargs="+", metavar="name")
    preset.add_argument("--out", help="output root (default $OQBM_OUT or ./oqbm_out)")
    preset.add_argument("--jobs", type=int, default=1, help="presets to run in parallel processes")
    preset.add_argument("--t-end", type=float, default=None, help="shorten the run to this end time")
    sub.add_parser("list-presets", help="list presets with their parameters")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out, err = sys.stdout, sys.stderr
    if args.command == "list-presets":
        _print_presets(out)
        return EXIT_OK
    if args.command == "preset":
        unknown = [n for n in args.names if n not in list_presets()]
        if unknown:
            print(f"unknown preset(s): {', '.join(unknown)}; see 'oqbm list-presets'", file=err)
            return EXIT_CONFIG
        if args.t_end is not None and args.t_end < 0:
            print("--t-end must be >= 0", file=err)
            return EXIT_CONFIG
        root = args.out or os.environ.get("OQBM_OUT", DEFAULT_ROOT)
        jobs = [(name, root, args.t_end) for name in args.names]
        if args.jobs > 1 and len(jobs) > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_run_preset, jobs))
        else:
            results = [_run_preset(job) for job in jobs]
        code = EXIT_OK
        for name, exit_code, directory, error in results:
            status = "ok" if exit_code == EXIT_OK else f"failed ({error})"
            print(f"{name}: {status} -> {directory}", file=out)
            code = max(code, exit_code)
        return code
    try:
        scenario = load_config(args.config)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except OQBMError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    mode = "crosscheck" if args.command == "crosscheck" else None
    report = run_scenario(scenario, args.out, mode)
    _summary(report, out if report.exit_code == EXIT_OK else err)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
