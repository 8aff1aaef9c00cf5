"""Command-line front end.

Every subcommand writes CSV to ``--out`` (stdout by default) preceded by one
``#`` line holding the schema version and the fully resolved configuration.
Exit codes: 0 ok, 2 configuration error, 3 validity-window violation,
4 convergence failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as cfgmod
from .config import ConfigError
from .correlators import BandResponse, heat_rate, heat_rate_closed_form, physicality_margin
from .entanglement import (ContractError, NumericalDegeneracyError, averaged_log_negativity,
                           analytic_log_negativity, breaking_threshold, cycle_average,
                           cycle_times, entanglement_unit, log_negativity)
from .floquet import (ConvergenceError, floquet_coefficients, generalized_fdr_residual,
                      static_fdr_residual)
from .model import DomainError, ValidityWarning

EXIT_OK, EXIT_CONFIG, EXIT_VALIDITY, EXIT_CONVERGENCE = 0, 2, 3, 4


class ValidityViolation(RuntimeError):
    pass


def _map(func, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _check_physical(sigma, where):
    margin = physicality_margin(sigma)
    if margin < -1e-10:
        raise ValidityViolation(f"unphysical covariance at {where} (margin {margin:.3e})")


# -- subcommand bodies: each returns (column names, rows) ---------------------------------

def run_floquet(cfg, jobs=1):
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    lo = cfg["omega_min"] if cfg["omega_min"] is not None else 0.01
    hi = cfg["omega_max"] if cfg["omega_max"] is not None else 2 * drv.omega_d
    grid = np.linspace(lo, hi, cfg["n_points"])
    sol = floquet_coefficients(drv, model, grid, order=cfg["order"], k_max=cfg["k_max"],
                               method=cfg["method"], strict=cfg["strict"])
    rows = []
    for k in sol.ks:
        vals = sol.coefficient(int(k))
        for w, a in zip(grid, vals):
            rows.append([w, int(k), a.real, a.imag])
    return ["omega", "k", "re_A", "im_A"], rows


def run_fdr(cfg, jobs=1):
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    lo = cfg["omega_min"] if cfg["omega_min"] is not None else 1e-3 * drv.omega_r
    hi = cfg["omega_max"] if cfg["omega_max"] is not None else 10 * drv.omega_r
    grid = np.geomspace(lo, hi, cfg["n_points"])
    rows = []
    for w in grid:
        rows.append([w, static_fdr_residual(model, drv, w),
                     generalized_fdr_residual(model, drv, w, k_max=cfg["k_max"], method="exact"),
                     generalized_fdr_residual(model, drv, w, k_max=cfg["k_max"],
                                              method="recursion", order=cfg["order"])])
    return ["omega", "static_residual", "driven_residual_exact", "driven_residual_recursion"], rows


def _oracle_series(cfg, pair, t_end):
    from .oracle import oracle_band_covariance

    return oracle_band_covariance(
        cfgmod.model_of(cfg), cfgmod.driving_of(cfg), pair, t_end,
        halfwidth=cfg["oracle_halfwidth"], coarse=cfg["oracle_coarse"],
        steps_per_period=cfg["oracle_steps_per_period"],
        record_periods=cfg["oracle_record_periods"])


def run_energy(cfg, jobs=1):
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    pair = cfgmod.pair_of(cfg)
    resp = BandResponse(model, drv, pair, k_max=cfg["k_max"])
    q = heat_rate(model, drv, pair, order=cfg["order"], method=cfg["method"]).total
    base = (0.5 + pair.n_i) * pair.omega_i
    cols = ["t", "E_i_exact", "E_i_asymptote"]
    if cfg["oracle"]:
        times, osig = _oracle_series(cfg, pair, cfg["t"])
        cols.append("E_i_oracle")
    else:
        times = np.linspace(0, cfg["t"], cfg["t_points"])
    sig = resp.covariances(times, "exact")
    rows = []
    for n, (t, s) in enumerate(zip(times, sig)):
        _check_physical(s, f"t={t:g}")
        row = [t, pair.omega_i * (s[0, 0] + s[1, 1]) / 2, base + q * t]
        if cfg["oracle"]:
            row.append(pair.omega_i * (osig[n, 0, 0] + osig[n, 1, 1]) / 2)
        rows.append(row)
    return cols, rows


def run_heat(cfg, jobs=1):
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    rows = []
    for wi in cfgmod.figure_grid(cfg):
        pair = cfgmod.pair_of(cfg, wi, drv.omega_d - wi)
        h = heat_rate(model, drv, pair, order=cfg["order"], method=cfg["method"])
        rows.append([wi, h.total, h.resonant, h.pair_creation,
                     heat_rate_closed_form(model, drv, pair),
                     heat_rate_closed_form(model, drv, pair, total_density=False)])
    return ["omega_i", "Qdot", "Qdot_resonant", "Qdot_pair_creation",
            "Qdot_closed_form_total_I", "Qdot_closed_form_split_I"], rows


def _spectrum_point(args):
    cfg, wi = args
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        pair = cfgmod.pair_of(cfg, wi, drv.omega_d - wi)
    resp = BandResponse(model, drv, pair, k_max=cfg["k_max"])
    times = cycle_times(cfg["t"], drv.omega_d, cfg["cycle_points"])
    sig = resp.covariances(times, cfg["mode"])
    for t, s in zip(times, sig):
        _check_physical(s, f"omega_i={wi:g}, t={t:g}")
    en = np.array([log_negativity(s).E_N for s in sig])
    avg = cycle_average(times, en, drv.omega_d, cfg["cycle_points"])[1][-1]
    e0 = entanglement_unit(model, drv, pair)
    return [wi / model.gamma0, avg / e0, analytic_log_negativity(model, drv, pair, cfg["t"]) / e0]


def run_spectrum(cfg, jobs=1):
    grid = cfgmod.figure_grid(cfg)
    rows = _map(_spectrum_point, [(cfg, w) for w in grid], jobs)
    return ["omega_i_over_gamma0", "E_N_exact_over_E0", "E_N_analytic_over_E0"], rows


PANELS = {"a": (0.0, 0.0), "b": (0.0, 10.0), "c": (10.0, 10.0)}  # (T_R, T_L) / gamma0


def run_figure3(cfg, jobs=1):
    tr, tl = PANELS[cfg["panel"]]
    cfg = dict(cfg, T_R=tr * cfg["gamma0"], T_L=tl * cfg["gamma0"])
    return run_spectrum(cfg, jobs)


def _threshold_point(args):
    cfg, wi, factors = args
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        pair = cfgmod.pair_of(cfg, wi, drv.omega_d - wi)
    th_i = breaking_threshold(model, pair, wi, "R")
    th_j = breaking_threshold(model, pair, pair.omega_j, "L")
    t_star = min(th_i.T_star, th_j.T_star)
    row = [wi, th_i.n_star, th_i.n_star_ohmic, th_i.T_star, th_j.T_star, t_star]
    for f in factors:
        p = pair.with_temperatures(f * t_star, f * t_star)
        resp = BandResponse(model, drv, p, k_max=cfg["k_max"])
        row.append(averaged_log_negativity(resp, cfg["t"], cfg["cycle_points"]))
    return row


def run_threshold(cfg, jobs=1):
    factors = [float(f) for f in cfg["threshold_factors"]]
    grid = cfgmod.figure_grid(cfg) if cfg["temperatures"] is None else [cfg["omega_i"]]
    if cfg["temperatures"] is not None:
        return _threshold_temperature_sweep(cfg)
    rows = _map(_threshold_point, [(cfg, w, factors) for w in grid], jobs)
    cols = ["omega_i", "n_star", "n_star_ohmic", "T_star_i", "T_star_j", "T_star"]
    cols += [f"E_N_at_{f:g}T_star" for f in factors]
    return cols, rows


def _threshold_temperature_sweep(cfg):
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    pair = cfgmod.pair_of(cfg)
    th = min(breaking_threshold(model, pair, pair.omega_i, "R").T_star,
             breaking_threshold(model, pair, pair.omega_j, "L").T_star)
    rows = []
    for temp in cfg["temperatures"]:
        p = pair.with_temperatures(float(temp), float(temp))
        resp = BandResponse(model, drv, p, k_max=cfg["k_max"])
        rows.append([float(temp), th, averaged_log_negativity(resp, cfg["t"], cfg["cycle_points"])])
    return ["T", "T_star", "E_N_exact"], rows


def run_oracle(cfg, jobs=1):
    model, drv = cfgmod.model_of(cfg), cfgmod.driving_of(cfg)
    pair = cfgmod.pair_of(cfg)
    times, osig = _oracle_series(cfg, pair, cfg["t"])
    resp = BandResponse(model, drv, pair, k_max=cfg["k_max"])
    asig = resp.covariances(times, "exact")
    rows = []
    for t, so, sa in zip(times, osig, asig):
        rows.append([t, pair.omega_i * (so[0, 0] + so[1, 1]) / 2,
                     pair.omega_i * (sa[0, 0] + sa[1, 1]) / 2,
                     log_negativity(so).E_N, log_negativity(sa).E_N,
                     so[0, 2], sa[0, 2]])
    return ["t", "E_i_oracle", "E_i_exact", "E_N_oracle", "E_N_exact",
            "x_ix_j_oracle", "x_ix_j_exact"], rows


COMMANDS = {
    "floquet": run_floquet,
    "fdr-check": run_fdr,
    "energy": run_energy,
    "heat": run_heat,
    "spectrum": run_spectrum,
    "threshold": run_threshold,
    "oracle": run_oracle,
    "figure2": run_energy,
    "figure3": run_figure3,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drivenqbm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON configuration file")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        s.add_argument("--out", help="output CSV path (default stdout)")
        if name == "figure2":
            s.add_argument("--oracle", action="store_true", help="add the discrete-bath column")
        if name == "figure3":
            s.add_argument("--panel", choices=("a", "b", "c"))
    return p


def write_csv(stream, command, cfg, cols, rows):
    stream.write(cfgmod.header(command, cfg) + "\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.set)
        if getattr(args, "oracle", False):
            overrides.append("oracle=true")
        if getattr(args, "panel", None):
            overrides.append(f"panel={args.panel}")
        cfg = cfgmod.load(args.config, overrides)
        if args.jobs < 1:
            raise ConfigError("--jobs must be positive")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            if cfg["strict"]:
                warnings.simplefilter("error", ValidityWarning)
            cols, rows = COMMANDS[args.command](cfg, args.jobs)
    except (ValidityViolation, ValidityWarning, DomainError, ContractError,
            NumericalDegeneracyError) as exc:
        print(f"validity error: {exc}", file=sys.stderr)
        return EXIT_VALIDITY
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    buf = io.StringIO()
    write_csv(buf, args.command, cfg, cols, rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
