"""Command-line front end.

Subcommands:

* ``design``    solve for the chirp, write the report and chirp table
* ``simulate``  propagate the configured frames, write trace CSVs
* ``verify``    check transfer and the RWA-validity metric
* ``sweep``     run whole configs concurrently, isolated output dirs

Exit codes: 0 success, 1 config or validation error, 2 design did not
converge (report still written), 3 integration failure, 4 verification
below threshold.  Stdout carries stable ``key = value`` lines; files go to
the config's output directory (relative paths resolve under
``$RABICHIRP_OUTDIR`` when set).  Runs are deterministic: repeated
invocations produce byte-identical outputs.
"""

import argparse
import concurrent.futures
import math
from pathlib import Path
import sys

import numpy as np

from . import __version__
from .config import OUTPUT_ROOT_ENV, RunConfig, read_table, write_table
from .designer import chirp_residual, design_chirp, rwa_validity_metric, verify_transfer
from .dynamics import (
    FRAME_LAB,
    FRAME_TAU,
    Amplitudes,
    integrate_lab,
    integrate_tau_full,
    integrate_tau_rwa,
    phase_integrals,
    tau_trace_to_rabi,
)
from .errors import (
    ConfigError,
    DesignFailureError,
    IntegrationError,
    RabiChirpError,
    ValidationError,
)
from .timefun import TimeFunction
from .transform import build_tau_map

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INTEGRATION = 3
EXIT_VERIFY = 4

CHIRP_FILE = "designed_chirp.txt"


def _emit(key, value):
    if isinstance(value, float):
        value = f"{value:.12g}"
    print(f"{key} = {value}")


def _load_config(path, overrides, outdir):
    cfg = RunConfig.from_file(path)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg = cfg.override(key.strip(), value.strip())
    if outdir:
        cfg = cfg.override("output.dir", outdir)
    return cfg


def _report_lines(report, thresholds):
    lines = {
        "converged": str(report.converged).lower(),
        "iterations": report.iterations,
        "final_change": f"{report.final_change:.12g}",
        "residual_sup": f"{report.residual_sup:.12g}",
        "rwa_metric": f"{report.rwa_metric:.12g}",
        "tau_total": f"{report.tau_total:.12g}",
        "grid_points": int(report.grid.size),
        "rwa_metric_threshold": f"{thresholds['rwa_metric']:.12g}",
        "transfer_threshold": f"{thresholds['transfer']:.12g}",
    }
    if report.p_beta_max is not None:
        lines["p_beta_max"] = f"{report.p_beta_max:.12g}"
        lines["tau_at_max"] = f"{report.tau_at_max:.12g}"
    return lines


def _write_report(outdir, report, thresholds):
    outdir.mkdir(parents=True, exist_ok=True)
    lines = _report_lines(report, thresholds)
    with open(outdir / "design_report.txt", "w") as fh:
        fh.write("# rabichirp design report\n")
        for k, v in lines.items():
            fh.write(f"{k} = {v}\n")
    write_table(
        outdir / CHIRP_FILE,
        report.grid,
        report.chirp.params["values"],
        comment="designed chirp: t omega",
    )
    with open(outdir / "design_iterates.txt", "w") as fh:
        fh.write("# iteration sup_change residual_sup\n")
        for it in report.iterates:
            fh.write(f"{it.index} {it.sup_change:.17g} {it.residual_sup:.17g}\n")
    for name, trace in report.traces.items():
        trace.to_csv(outdir / f"trace_{name}.csv")


def cmd_design(args):
    cfg = _load_config(args.config, args.set, args.outdir)
    if not cfg.wants_design():
        raise ConfigError("chirp is explicit; nothing to design", key="pulse.chirp")
    model = cfg.build_model()
    pulse = cfg.build_pulse()
    report = design_chirp(
        model,
        pulse,
        grid=cfg.grids["design_n"],
        tol_fp=float(cfg.design["tol_fp"]),
        max_iter=int(cfg.design["max_iter"]),
        relax=float(cfg.design["relax"]),
        tol=float(cfg.integrate["tol"]),
    )
    outdir = cfg.output_dir()
    _write_report(outdir, report, cfg.thresholds)
    for k, v in _report_lines(report, cfg.thresholds).items():
        _emit(k, v)
    _emit("chirp_table", outdir / CHIRP_FILE)
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def _resolve_pulse(cfg, model):
    """Pulse with a usable chirp: explicit, previously designed, or fresh."""
    if not cfg.wants_design():
        return cfg.build_pulse(), None
    table = cfg.output_dir() / CHIRP_FILE
    if table.exists():
        times, values = read_table(table)
        _emit("designed_chirp_loaded", table)
        return cfg.build_pulse(TimeFunction.tabulated(times, values)), None
    _emit("designing_chirp", "no stored table found")
    report = design_chirp(
        model,
        cfg.build_pulse(),
        grid=cfg.grids["design_n"],
        tol_fp=float(cfg.design["tol_fp"]),
        max_iter=int(cfg.design["max_iter"]),
        relax=float(cfg.design["relax"]),
        verify=False,
    )
    if not report.converged:
        raise DesignFailureError(
            f"chirp design did not converge (final change {report.final_change:g})"
        )
    _write_report(cfg.output_dir(), report, cfg.thresholds)
    return cfg.build_pulse(report.chirp), report


def cmd_simulate(args):
    cfg = _load_config(args.config, args.set, args.outdir)
    if args.frames:
        cfg = cfg.override("integrate.frames", args.frames)
    model = cfg.build_model()
    pulse, _ = _resolve_pulse(cfg, model)
    tau_map = build_tau_map(model, pulse, cfg.grids["tau_n"])
    tol = float(cfg.integrate["tol"])
    n = int(cfg.integrate["samples"])
    convention = cfg.integrate["phase_convention"]
    tau_hi = cfg.integrate["tau_max"]
    tau_hi = tau_map.tau_max if tau_hi is None else min(float(tau_hi), tau_map.tau_max)
    outdir = cfg.output_dir()
    outdir.mkdir(parents=True, exist_ok=True)
    phases = None
    for frame in cfg.integrate["frames"]:
        if frame == "lab":
            trace = integrate_lab(
                model, pulse, Amplitudes(1.0, 0.0, FRAME_LAB),
                tol=tol, n_samples=n, tau_map=tau_map)
        elif frame == "tau-full":
            trace = integrate_tau_full(
                model, pulse, tau_map, Amplitudes(1.0, 0.0, FRAME_TAU),
                (0.0, tau_hi), tol=tol, n_samples=n, phase_convention=convention)
        elif frame == "tau-rwa":
            trace = integrate_tau_rwa(
                model, pulse, tau_map, Amplitudes(1.0, 0.0, FRAME_TAU),
                (0.0, tau_hi), tol=tol, n_samples=n, phase_convention=convention)
        else:  # rabi
            base = integrate_tau_rwa(
                model, pulse, tau_map, Amplitudes(1.0, 0.0, FRAME_TAU),
                (0.0, tau_hi), tol=tol, n_samples=n, phase_convention=convention)
            if phases is None:
                phases = phase_integrals(model, pulse, tau_map)
            trace = tau_trace_to_rabi(base, phases)
        path = outdir / f"trace_{frame}.csv"
        trace.to_csv(path)
        _emit(f"trace_{frame}", path)
        _emit(f"norm_drift_{frame}", trace.norm_drift())
        _emit(f"final_pop_beta_{frame}", float(trace.pop2[-1]))
    return EXIT_OK


def cmd_verify(args):
    cfg = _load_config(args.config, args.set, args.outdir)
    model = cfg.build_model()
    pulse, report = _resolve_pulse(cfg, model)
    tau_map = build_tau_map(model, pulse, cfg.grids["tau_n"])
    metric = rwa_validity_metric(model, pulse)
    tau_max = cfg.integrate["tau_max"]
    tau_max = math.pi if tau_max is None else float(tau_max)
    result = verify_transfer(
        model, pulse, tol=float(cfg.integrate["tol"]), tau_max=tau_max,
        use_rwa=not args.full, tau_map=tau_map,
        phase_convention=cfg.integrate["phase_convention"])
    residual = chirp_residual(model, pulse)
    drift = result.trace.norm_drift()
    _emit("p_beta_max", result.p_beta_max)
    _emit("tau_at_max", result.tau_at_max)
    _emit("rwa_metric", metric)
    _emit("residual_sup", residual.sup)
    _emit("norm_drift", drift)
    _emit("equation", "full" if args.full else "rwa")
    ok = (
        result.p_beta_max >= float(cfg.thresholds["transfer"])
        and metric >= float(cfg.thresholds["rwa_metric"])
    )
    _emit("verdict", "pass" if ok else "fail")
    return EXIT_OK if ok else EXIT_VERIFY


def _sweep_one(config_path, overrides):
    # runs in a worker process; never raises; stdout goes to its own log
    import contextlib

    try:
        cfg = _load_config(config_path, overrides, None)
        stem = Path(config_path).stem
        outdir = cfg.output_dir() / stem
        cfg = cfg.override("output.dir", str(outdir))
        ns = argparse.Namespace(
            config=config_path, set=list(overrides or ()) + [
                f"output.dir={cfg.output['dir']}"],
            outdir=None, frames=None, full=False)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "run.log", "w") as log, \
                contextlib.redirect_stdout(log):
            code = EXIT_OK
            if cfg.wants_design():
                code = cmd_design(ns)
            if code == EXIT_OK:
                code = cmd_simulate(ns)
            if code == EXIT_OK:
                code = cmd_verify(ns)
        return config_path, code, ""
    except RabiChirpError as exc:
        return config_path, _error_code(exc), str(exc)


def cmd_sweep(args):
    worst = EXIT_OK
    with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = [pool.submit(_sweep_one, c, args.set) for c in args.config]
        for fut in futures:
            path, code, message = fut.result()
            _emit(f"sweep_{Path(path).stem}", code if not message else f"{code} ({message})")
            worst = worst or code
    return worst


def _error_code(exc):
    if isinstance(exc, IntegrationError):
        return EXIT_INTEGRATION
    if isinstance(exc, DesignFailureError):
        return EXIT_NO_CONVERGENCE
    return EXIT_CONFIG


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rabichirp",
        description="Design and verify chirped pulses for two-level systems "
                    "with field-induced dipole moments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (dotted path)")
        p.add_argument("--outdir", help="override output.dir")

    p = sub.add_parser("design", help="solve for the optimized chirp")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="propagate and write trace CSVs")
    common(p)
    p.add_argument("--frames", type=lambda s: s.split(","),
                   help="comma-separated subset of lab,tau-full,tau-rwa,rabi")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check transfer and RWA validity")
    common(p)
    p.add_argument("--full", action="store_true",
                   help="verify against the full (non-RWA) equation")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run several configs concurrently")
    p.add_argument("config", nargs="+", help="YAML run configurations")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IntegrationError as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        if exc.t is not None:
            _emit("integration_failure_t", exc.t)
        return EXIT_INTEGRATION
    except DesignFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RabiChirpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
