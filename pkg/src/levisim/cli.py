"""Command-line front end: ``levisim <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 2 configuration error, 3 model error, 4 I/O error.
On failure a JSON error record is printed to stderr and, when possible,
written to ``<out>/error.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings

import numpy as np

from . import __version__, pipeline
from .config import load_config
from .errors import ConfigError, ModelError, RegimeViolation
from .io import write_csv, write_json

log = logging.getLogger("levisim")

COMMANDS = ("wells", "freqs", "simulate", "psd", "sensitivity", "rotation", "grating-scan",
            "casimir", "reproduce-all")


class Context:
    def __init__(self, cfg, out, seed, threads, plots, command):
        self.cfg, self.out, self.seed, self.threads, self.plots = cfg, out, seed, threads, plots
        self.meta = {"config_hash": cfg.hash(), "seed": seed, "command": command}

    def path(self, name):
        return os.path.join(self.out, name)

    def csv(self, name, data):
        write_csv(self.path(name), data, self.meta)

    def json(self, name, payload):
        write_json(self.path(name), payload, self.meta)

    def plot(self, fn, name, *args, **kw):
        if self.plots:
            fn(self.path(name), *args, **kw)


def _plotting():
    from . import plotting

    return plotting


def run_wells(ctx):
    rows, profile, summary = pipeline.wells(ctx.cfg)
    ctx.csv("wells.csv", rows)
    ctx.csv("potential_profile.csv", profile)
    ctx.json("wells.json", summary)
    ctx.plot(_plotting().line_plot, "potential_profile.svg",
             [(profile["d_nm"], profile["U_kBT"], "")], "distance from surface (nm)", "U (k_B T)")


def run_freqs(ctx):
    rows, summary = pipeline.freqs(ctx.cfg)
    ctx.csv("freqs.csv", rows)
    ctx.json("freqs.json", summary)
    N = [r["N"] for r in rows]
    ctx.plot(_plotting().line_plot, "freq_ratio.svg",
             [(N, [r[k] for r in rows], k) for k in ("R_x", "R_y", "R_z")],
             "well index N", "f / f_free", markers=True)


def _write_series(ctx, series):
    for name, ts in series.items():
        ts.to_csv(ctx.path(f"trajectory_{name}.csv"), header=[f"config_hash_sim: {ts.metadata['config_hash']}"])


def run_simulate(ctx):
    series, summary = pipeline.simulate(ctx.cfg, ctx.seed, ctx.threads)
    _write_series(ctx, series)
    ctx.json("simulate.json", summary)


def run_psd(ctx):
    spectra, fits, summary = pipeline.psd(ctx.cfg, ctx.seed, ctx.threads)
    for name, est in spectra.items():
        ctx.csv(f"psd_{name}.csv", {"f_Hz": est.freq, "psd_z_m2_per_Hz": est.psd})
    ctx.json("psd.json", {"fits": fits, "simulation": summary})
    ctx.plot(_plotting().line_plot, "psd.svg",
             [(est.freq[1:], est.psd[1:], name) for name, est in spectra.items()],
             "frequency (Hz)", "S_z (m^2/Hz)", logx=True, logy=True)


def run_sensitivity(ctx):
    torque_rows, spectrum, dist_rows, summary = pipeline.sensitivity(ctx.cfg, ctx.seed)
    ctx.csv("torque_vs_pressure.csv", torque_rows)
    ctx.csv("torque_spectrum.csv", spectrum)
    ctx.csv("force_vs_distance.csv", dist_rows)
    ctx.json("sensitivity.json", summary)
    p = _plotting()
    ctx.plot(p.line_plot, "torque_spectrum.svg", [(spectrum["f_Hz"], spectrum["S_T_Nm_per_rtHz"], "")],
             "frequency (Hz)", "S_T^1/2 (N m Hz^-1/2)", logx=True, logy=True)
    ctx.plot(p.line_plot, "torque_vs_pressure.svg",
             [([r["P_torr"] for r in torque_rows], [r["S_T_Nm_per_rtHz"] for r in torque_rows], "")],
             "pressure (Torr)", "S_T^1/2 (N m Hz^-1/2)", logx=True, logy=True)
    wells = [r for r in dist_rows if r["N"] > 0]
    ctx.plot(p.line_plot, "force_vs_distance.svg",
             [([r["d_nm"] for r in wells], [r[k] for r in wells], k) for k in ("S_F_x", "S_F_y", "S_F_z")],
             "distance (nm)", "S_F^1/2 (N Hz^-1/2)", markers=True)


def run_rotation(ctx):
    rows, summary = pipeline.rotation_scan(ctx.cfg)
    ctx.csv("rotation.csv", rows)
    ctx.json("rotation.json", summary)
    series = []
    for s in dict.fromkeys(r["surface"] for r in rows):
        sel = [r for r in rows if r["surface"] == s]
        series.append(([r["P_torr"] for r in sel], [r["f_rot_Hz"] for r in sel], s))
    ctx.plot(_plotting().line_plot, "rotation.svg", series, "pressure (Torr)", "f_rot (Hz)",
             logx=True, logy=True, markers=True)


def run_grating(ctx):
    rows, field, summary = pipeline.grating_scan(ctx.cfg, ctx.threads)
    ctx.csv("grating_scan.csv", [{k: r[k] for k in ("N", "x_nm", "f_x_Hz", "well_d_nm")} for r in rows])
    ctx.json("grating.json", summary)
    p = _plotting()
    series = []
    for N in (1, 2):
        sel = [r for r in rows if r["N"] == N]
        series.append(([r["x_nm"] for r in sel], [r["f_x_Hz"] for r in sel], f"well {N}"))
    ctx.plot(p.line_plot, "grating_scan.svg", series, "x (nm)", "f_x (Hz)")
    ctx.plot(p.heatmap, "grating_nearfield.svg", field["x_nm"], field["h_nm"], field["I"],
             "x (nm)", "height above grating (nm)", "intensity (W/m^2)")


def run_casimir(ctx):
    tables, summary = pipeline.casimir_scan(ctx.cfg, ctx.threads)
    ctx.csv("casimir_theta.csv", tables["theta"])
    ctx.csv("casimir_distance.csv", tables["distance"])
    ctx.csv("casimir_width.csv", tables["width"])
    ctx.json("casimir.json", summary)
    p = _plotting()
    t = tables
    ctx.plot(p.line_plot, "casimir_theta.svg", [(t["theta"]["theta_deg"], t["theta"]["torque_Nm"], "dumbbell"),
                                                (t["theta"]["theta_deg"], t["theta"]["sphere_torque_Nm"], "sphere")],
             "theta (deg)", "torque (N m)")
    ctx.plot(p.line_plot, "casimir_width.svg", [(t["width"]["width_nm"], t["width"]["torque_Nm"], "")],
             "stripe width (nm)", "torque (N m)", markers=True)
    ctx.plot(p.line_plot, "casimir_distance.svg", [(t["distance"]["d_nm"], np.abs(t["distance"]["torque_Nm"]), "")],
             "d (nm)", "|torque| (N m)", logy=True)


RUNNERS = {
    "wells": run_wells,
    "freqs": run_freqs,
    "simulate": run_simulate,
    "psd": run_psd,
    "sensitivity": run_sensitivity,
    "rotation": run_rotation,
    "grating-scan": run_grating,
    "casimir": run_casimir,
}


STAGES = tuple(RUNNERS)


def run_all(ctx):
    for name in STAGES:
        log.info("running %s", name)
        ctx.meta["command"] = name
        RUNNERS[name](ctx)


RUNNERS["reproduce-all"] = run_all


def build_parser():
    ap = argparse.ArgumentParser(prog="levisim", description="Levitated nanodumbbell near-surface model.")
    ap.add_argument("--version", action="version", version=f"levisim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=0, help="64-bit RNG seed")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--no-plots", action="store_true")
    return ap


def _fail(code, kind, exc, out):
    rec = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("line", "key", "step", "residual", "nfev"):
        if getattr(exc, attr, None) is not None:
            rec[attr] = getattr(exc, attr)
    text = json.dumps(rec, sort_keys=True, default=str)
    print(text, file=sys.stderr)
    try:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "error.json"), "w") as fh:
            fh.write(text + "\n")
    except OSError:
        pass
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = os.environ.get("LEVISIM_LOG", "warn").upper()
    level = {"WARN": "WARNING"}.get(level, level)
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("always", RegimeViolation)
    if args.threads < 1:
        return _fail(2, "config", ConfigError("--threads must be >= 1"), args.out)
    if not 0 <= args.seed < 2**64:
        return _fail(2, "config", ConfigError("--seed must be an unsigned 64-bit integer"), args.out)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _fail(2, "config", exc, args.out)
    except OSError as exc:
        return _fail(4, "io", exc, args.out)
    ctx = Context(cfg, args.out, args.seed, args.threads, not args.no_plots, args.command)
    try:
        os.makedirs(args.out, exist_ok=True)
        RUNNERS[args.command](ctx)
    except ConfigError as exc:
        return _fail(2, "config", exc, args.out)
    except (ModelError, ValueError) as exc:
        return _fail(3, "model", exc, args.out)
    except OSError as exc:
        return _fail(4, "io", exc, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
