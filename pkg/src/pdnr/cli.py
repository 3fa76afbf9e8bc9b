"""Command-line driver: ``pdnr {evolve,wigner,semiclassical,classify,preset-list}``."""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np
import scipy

from . import __version__
from .config import PRESET_NOTES, RunConfig, load_preset, preset_members, preset_names
from .errors import ConfigError, PDNRError
from .fock import basis, ket2dm
from .master import evolve_master
from .model import AUTO, classify_regime
from .qsd import QsdConfig, run_ensemble
from .semiclassics import evolve_classical, steady_states, stroboscopic_map
from .serialize import (DEFAULT_DIGITS, GOLDEN_DIGITS, fmt, params_hash, write_json,
                        write_timeseries_csv, write_timeseries_json, write_wigner_csv,
                        write_wigner_grid, _write)
from .wigner import (GridSpec, find_humps, minor_axis_variance, normalization, symmetry_defect,
                     wigner_from_density)

CONFIG_ECHO = "config.txt"
VERSION_STAMP = "version.txt"
QSD_DEFAULT_STEP = 5e-4


# -- pipeline pieces (importable, used by the tests) ------------------------

def run_dynamics(cfg):
    """Integrate ``cfg`` from the vacuum.

    Returns ``(times, mean_n, stderr_n, states)``; ``stderr_n`` is None for the
    master method.
    """
    params = cfg.model_params()
    times = cfg.sample_schedule()
    if cfg.method == "master":
        step = None if cfg.step == AUTO else float(cfg.step)
        res = evolve_master(ket2dm(basis(params.dim, 0)), times, params, step=step,
                            check_truncation=cfg.check_truncation)
        return times, res.mean_n, None, res.states
    if cfg.method == "qsd":
        step = QSD_DEFAULT_STEP if cfg.step == AUTO else float(cfg.step)
        qcfg = QsdConfig(n_traj=cfg.n_traj, sample_times=tuple(times), step=step, seed=cfg.seed,
                         scheme=cfg.scheme, chunk_size=cfg.chunk_size)
        res = run_ensemble(basis(params.dim, 0), qcfg, params)
        return times, res.mean_n, res.stderr_n, res.density_estimates
    raise ConfigError("this command needs method = master or qsd", "method")


def last_period_window(cfg, times):
    """Indices of the samples inside the last full pulse period (whole series for cw)."""
    period = cfg.period()
    if period is None:
        return np.arange(times.size)
    if times[-1] - period < times[0]:
        raise ConfigError("simulated window is shorter than one pulse period", "t_end")
    return np.flatnonzero(times > times[-1] - period + 1e-12)


def resolve_instant(cfg, times, mean_n):
    """Sample index selected by ``cfg.instant``."""
    if cfg.instant == "at_time":
        t = float(cfg.instant_time)
        tol = 1e-9 * max(1.0, abs(t))
        if t < times[0] - tol or t > times[-1] + tol:
            raise ConfigError(f"instant_time {t} lies outside the simulated window "
                              f"[{times[0]:.6g}, {times[-1]:.6g}]", "instant_time")
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > tol:
            raise ConfigError(f"instant_time {t} is not a sample time", "instant_time")
        return i
    win = last_period_window(cfg, times)
    n = mean_n[win]
    i_min, i_max = int(np.argmin(n)), int(np.argmax(n))
    if cfg.instant == "at_min_n":
        return int(win[i_min])
    if cfg.instant == "at_max_n":
        return int(win[i_max])
    # at_mid_n: sample nearest the midpoint level on the stretch between the extrema
    lo, hi = sorted((i_min, i_max))
    seg = n[lo:hi + 1]
    level = 0.5 * (n[i_min] + n[i_max])
    return int(win[lo + int(np.argmin(np.abs(seg - level)))])


def wigner_summary(grid, threshold, mean_n_at):
    humps = find_humps(grid, threshold=threshold)
    return {
        "time": grid.time,
        "mean_n": mean_n_at,
        "params_hash": grid.params_hash,
        "symmetry_defect": symmetry_defect(grid),
        "normalization": normalization(grid),
        "minor_axis_variance": minor_axis_variance(grid),
        "imag_residue": grid.imag_residue,
        "required_span": grid.required_span,
        "span_ok": grid.span_ok,
        "humps": humps.as_dict(),
    }


def steady_state_rows(cfg):
    """Steady-state table for the cw counterpart of ``cfg`` (envelope held at 1)."""
    report = steady_states(cfg.model_params(cw=True))
    rows = []
    for sol in report.solutions:
        rows.append({"J": report.J, "n": sol.n, "phi1": sol.phases[0], "phi2": sol.phases[1],
                     "residual1": sol.residuals[0], "residual2": sol.residuals[1],
                     "branch": sol.branch, "stable": sol.stable})
    flags = {"J": report.J, "J_threshold": report.J_threshold,
             "below_threshold": report.below_threshold, "inconsistent": report.inconsistent,
             "origin_stable": report.origin_stable, "bistable": report.bistable,
             "closed_form_n": report.closed_form_n}
    return rows, flags


# -- output helpers -----------------------------------------------------------

def _prepare_out(out, cfg):
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, CONFIG_ECHO), cfg.to_text())
    _write(os.path.join(out, VERSION_STAMP),
           f"pdnr {__version__}\nnumpy {np.__version__}\nscipy {scipy.__version__}\n")


def _digits(args):
    return GOLDEN_DIGITS if args.golden else DEFAULT_DIGITS


def _write_series(out, args, times, mean_n, stderr_n):
    if args.format == "json":
        write_timeseries_json(os.path.join(out, "timeseries.json"), times, mean_n, stderr_n)
    else:
        write_timeseries_csv(os.path.join(out, "timeseries.csv"), times, mean_n, stderr_n,
                             digits=_digits(args))


# -- subcommands --------------------------------------------------------------

def cmd_evolve(cfg, out, args):
    if cfg.method == "semiclassical":
        params = cfg.model_params()
        times = cfg.sample_schedule()
        trace = evolve_classical(complex(cfg.alpha0_re, cfg.alpha0_im), times, params,
                                 step=cfg.classical_step)
        _prepare_out(out, cfg)
        _write_series(out, args, times, trace.n, None)
        return 0
    times, mean_n, stderr_n, _ = run_dynamics(cfg)
    _prepare_out(out, cfg)
    _write_series(out, args, times, mean_n, stderr_n)
    return 0


def cmd_wigner(cfg, out, args):
    if cfg.instant == "at_time":
        # fail before the expensive integration
        resolve_instant(cfg, cfg.sample_schedule(), np.zeros(cfg.sample_schedule().size))
    times, mean_n, stderr_n, states = run_dynamics(cfg)
    i = resolve_instant(cfg, times, mean_n)
    rho = states[i]
    rho = 0.5 * (rho + rho.conj().T)
    grid = wigner_from_density(rho, grid=GridSpec(cfg.grid_span, cfg.grid_points), time=float(times[i]),
                               params_hash=params_hash(cfg.model_params().as_dict()))
    summary = wigner_summary(grid, cfg.hump_threshold, float(mean_n[i]))
    summary["instant"] = cfg.instant
    summary["method"] = cfg.method
    _prepare_out(out, cfg)
    _write_series(out, args, times, mean_n, stderr_n)
    digits = _digits(args)
    write_wigner_grid(os.path.join(out, "wigner_grid.txt"), grid, digits)
    write_wigner_csv(os.path.join(out, "wigner.csv"), grid, digits)
    write_json(os.path.join(out, "wigner_summary.json"), summary)
    return 0


def cmd_semiclassical(cfg, out, args):
    rows, flags = steady_state_rows(cfg)
    _prepare_out(out, cfg)
    digits = _digits(args)
    if args.format == "json":
        write_json(os.path.join(out, "steady_states.json"), {"flags": flags, "solutions": rows})
    else:
        lines = ["J,n,phi1,phi2,residual1,residual2,branch,stable"]
        for r in rows:
            lines.append(",".join([fmt(r["J"], digits), fmt(r["n"], digits), fmt(r["phi1"], digits),
                                   fmt(r["phi2"], digits), fmt(r["residual1"], digits),
                                   fmt(r["residual2"], digits), r["branch"], str(r["stable"]).lower()]))
        _write(os.path.join(out, "steady_states.csv"), "\n".join(lines) + "\n")
        write_json(os.path.join(out, "steady_state_flags.json"), flags)
    if args.strobe:
        params = cfg.model_params()
        alpha0 = complex(cfg.alpha0_re, cfg.alpha0_im)
        pts = stroboscopic_map(alpha0, params, cfg.strobe_periods, step=cfg.classical_step)
        train = params.pulse
        lines = ["k,t,re_alpha,im_alpha"]
        for k, a in enumerate(pts):
            t = train.t0 + (k + 0.5) * train.tau
            lines.append(f"{k},{fmt(t, digits)},{fmt(a.real, digits)},{fmt(a.imag, digits)}")
        _write(os.path.join(out, "strobe.csv"), "\n".join(lines) + "\n")
    return 0


def cmd_classify(cfg, out, args):
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        report = classify_regime(cfg.model_params())
    line = report.line()
    print(line)
    if out:
        os.makedirs(out, exist_ok=True)
        _write(os.path.join(out, "regime.txt"), line + "\n")
    return 0


COMMANDS = {
    "evolve": cmd_evolve,
    "wigner": cmd_wigner,
    "semiclassical": cmd_semiclassical,
    "classify": cmd_classify,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="pdnr", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pdnr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="flat key = value config file")
        src.add_argument("--preset", help="named preset (see preset-list)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the QSD seed")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--golden", action="store_true", help="17 significant digits in outputs")
        p.add_argument("--method", choices=("master", "qsd", "semiclassical"), default=None,
                       help="override the integration method")
        if name == "semiclassical":
            p.add_argument("--strobe", action="store_true", help="also write the stroboscopic map")
    sub.add_parser("preset-list")
    return parser


def _configs(args):
    """Yield ``(name, RunConfig)`` pairs; presets that name a group expand to members."""
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.method is not None:
        overrides["method"] = args.method
    if args.config:
        cfg = RunConfig.from_file(args.config)
        yield None, cfg.updated(**overrides) if overrides else cfg
        return
    for name in preset_members(args.preset):
        cfg = load_preset(name)
        yield name, cfg.updated(**overrides) if overrides else cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "preset-list":
        for name in preset_names():
            print(f"{name}\t{PRESET_NOTES.get(name, '')}")
        return 0
    try:
        jobs = list(_configs(args))
        base = args.out
        if base is None and args.command != "classify":
            base = os.path.join("runs", args.preset or os.path.splitext(os.path.basename(args.config))[0])
        for name, cfg in jobs:
            out = base
            if base is not None and len(jobs) > 1:
                out = os.path.join(base, name)
            COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"pdnr: config error [{exc.key}]: {exc}", file=sys.stderr)
        return 2
    except PDNRError as exc:
        print(f"pdnr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"pdnr: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
