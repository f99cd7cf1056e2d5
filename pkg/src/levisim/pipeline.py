"""Scenario runners behind the command-line subcommands.

Each runner takes a :class:`~levisim.config.RunConfig` and returns plain
tables (lists of row dicts or column dicts) plus a summary dict; writing
files is left to the caller.
"""

from __future__ import annotations

import concurrent.futures as cf
import logging

import numpy as np

from . import analysis, casimir, grating, langevin, rotation
from . import constants as const
from .damping import damping_rates, rotational_damping
from .optics import SurfaceSpec
from .trap import (
    dumbbell_polarizability,
    enhancement_ratio,
    free_space_well,
    potential,
    well_near_focus,
)

log = logging.getLogger(__name__)


def _pmap(fn, items, threads):
    items = list(items)
    if threads and threads > 1 and len(items) > 1:
        with cf.ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _flat_surface(cfg):
    s = cfg.surface()
    if not s.present:
        raise ValueError("this scenario needs a reflecting surface; set surface.kind")
    return s


# --- wells and frequencies ------------------------------------------------------


def wells(cfg):
    beam, geom = cfg.beam(), cfg.geom()
    surface = _flat_surface(cfg)
    tensor = dumbbell_polarizability(geom)
    rows = []
    for N in range(1, cfg["surface"]["n_wells"] + 1):
        w, _ = well_near_focus(beam, surface, geom, N, tensor)
        rows.append(w.as_row())
    # potential profile with the surface placed for the first well
    _, surf = well_near_focus(beam, surface, geom, 1, tensor)
    z = np.linspace(surf.z_s - 3.2 * beam.wavelength, surf.z_s - 1e-9, 801)
    com = np.stack([np.zeros_like(z), np.zeros_like(z), z], -1)
    U = potential(geom, tensor, beam, surf, com, beam.axis_direction())
    profile = {"d_nm": (surf.z_s - z) * 1e9, "U_kBT": U / const.kbt(cfg["environment"]["temperature_k"])}
    summary = {"waist_m": beam.waist, "first_well_d_nm": rows[0]["d_nm"]}
    return rows, profile, summary


def freqs(cfg):
    beam, geom = cfg.beam(), cfg.geom()
    surface = _flat_surface(cfg)
    tensor = dumbbell_polarizability(geom)
    free = free_space_well(beam, geom, tensor)
    rows = enhancement_ratio(beam, surface, geom, cfg["surface"]["n_wells"], tensor)
    for r in rows:
        w, _ = well_near_focus(beam, surface, geom, r["N"], tensor)
        r.update({"f_x_Hz": w.f_x, "f_y_Hz": w.f_y, "f_z_Hz": w.f_z})
    summary = {"free_f_x_Hz": free.f_x, "free_f_y_Hz": free.f_y, "free_f_z_Hz": free.f_z,
               "free_f_torsion_Hz": free.f_torsion, "waist_m": beam.waist}
    return rows, summary


# --- stochastic simulation --------------------------------------------------------


def trap_cases(cfg):
    """Harmonic traps for the first well near the surface and for free space."""
    beam, geom = cfg.beam(), cfg.geom()
    tensor = dumbbell_polarizability(geom)
    free = free_space_well(beam, geom, tensor)
    first, surf = well_near_focus(beam, _flat_surface(cfg), geom, 1, tensor)
    box = langevin.default_box(beam)
    traps = {
        "first_well": langevin.HarmonicTrap.from_well(geom, tensor, beam, surf, first.position, box),
        "free_space": langevin.HarmonicTrap.from_well(geom, tensor, beam, SurfaceSpec.none(),
                                                      free.position, box),
    }
    return traps, {"first_well": first, "free_space": free}


def sim_configs(cfg, seed):
    geom, env = cfg.geom(), cfg.env()
    traps, wells_ = trap_cases(cfg)
    s = cfg["sim"]
    if s["dt_ns"] > 0:
        dt = s["dt_ns"] * 1e-9
    else:
        fmax = max(float(np.max(t.frequencies(geom.mass, geom.inertia))) for t in traps.values())
        dt = 1.0 / (50 * fmax)
    configs = {}
    for i, (name, trap) in enumerate(traps.items()):
        configs[name] = langevin.SimConfig(dt=dt, n_steps=s["n_steps"], trap=trap, geom=geom, env=env,
                                           seed=seed, stride=s["stride"], stream=i)
    return configs, wells_


def simulate(cfg, seed, threads=1):
    configs, wells_ = sim_configs(cfg, seed)
    names = list(configs)
    series = dict(zip(names, _pmap(lambda n: langevin.simulate(configs[n]), names, threads)))
    summary = {}
    for name, ts in series.items():
        summary[name] = {"rms_x_nm": ts.rms("x") * 1e9, "rms_y_nm": ts.rms("y") * 1e9,
                         "rms_z_nm": ts.rms("z") * 1e9, "f_z_Hz": wells_[name].f_z,
                         "dt_s": configs[name].dt, "config_hash": configs[name].hash()}
    summary["rms_ratio_first_over_free"] = (summary["first_well"]["rms_z_nm"]
                                            / summary["free_space"]["rms_z_nm"])
    return series, summary


def psd(cfg, seed, threads=1):
    series, sim_summary = simulate(cfg, seed, threads)
    rates = damping_rates(cfg.env(), cfg.geom()).com_rates((1.0, 0.0, 0.0))
    nps = cfg["sim"]["nperseg"]
    spectra, fits = {}, {}
    for name, ts in series.items():
        est = analysis.welch_psd(ts, channel="z", nperseg=nps)
        f_z = sim_summary[name]["f_z_Hz"]
        fit = analysis.lorentzian_fit(est, band=analysis.fit_band(f_z, 1.0 / ts.dt))
        spectra[name] = est
        fits[name] = {"f0_Hz": fit.f0, "gamma_per_s": fit.gamma, "area_m2": fit.area,
                      "f0_input_Hz": f_z, "gamma_input_per_s": float(rates[2]),
                      "residual_rms": fit.residual_rms, "model": fit.model}
    return spectra, fits, sim_summary


# --- sensitivities -----------------------------------------------------------------


def sensitivity(cfg, seed):
    geom = cfg.geom()
    e = cfg["environment"]
    T = e["temperature_k"]
    P = np.logspace(-5, 0, 21)
    torque_rows = []
    for p in P:
        g, tau = rotational_damping(cfg.env(p), geom)
        torque_rows.append({"P_torr": p, "gamma_per_s": g, "tau_s": tau,
                            "S_T_Nm_per_rtHz": analysis.thermal_torque_sensitivity(geom.inertia, g, T)})
    p_t = e["torque_pressure_torr"]
    gamma_t, _ = rotational_damping(cfg.env(p_t), geom)
    dt = 0.05 / gamma_t
    t = np.arange(cfg["sim"]["spin_samples"]) * dt
    spin = langevin.thermal_spin(0.0, geom.inertia, gamma_t, t, T=T, seed=seed)
    f, curve, avg = analysis.frequency_resolved_torque(spin, 1 / dt, geom.inertia, gamma_t, nperseg=1024,
                                                       band=(0.1 * gamma_t / (2 * np.pi), 2 * gamma_t / np.pi))
    spectrum = {"f_Hz": f, "S_T_Nm_per_rtHz": curve}

    beam = cfg.beam()
    surface = _flat_surface(cfg)
    ds = [well_near_focus(beam, surface, geom, N)[0].d for N in range(1, cfg["surface"]["n_wells"] + 1)]
    dist_rows = analysis.sensitivity_vs_distance(cfg.env(), geom, [*ds, float("inf")])
    for i, r in enumerate(dist_rows):
        r["N"] = i + 1 if i < len(ds) else 0
    report = analysis.sensitivity_report(cfg.env(), geom)
    summary = {
        "at_pressure": report.as_dict(),
        "torque_pressure_torr": p_t,
        "gamma_at_torque_pressure": gamma_t,
        "S_T_thermal_Nm_per_rtHz": analysis.thermal_torque_sensitivity(geom.inertia, gamma_t, T),
        "S_T_frequency_resolved_avg": avg,
    }
    return torque_rows, spectrum, dist_rows, summary


# --- rotation ----------------------------------------------------------------------


def rotation_scan(cfg):
    beam, geom = cfg.beam(), cfg.geom()
    e = cfg["environment"]
    calib = {"sapphire": (e["rotation_calib_torr"], e["rotation_calib_hz"]),
             "grating": (e["grating_calib_torr"], e["grating_calib_hz"])}
    grid = np.logspace(np.log10(e["p_min_torr"]), np.log10(e["p_max_torr"]), e["n_pressures"])
    P = np.unique(np.concatenate([grid, [p for p, _ in calib.values()]]))
    env = cfg.env()
    own = rotation.rotation_curves(beam, geom, P, calib, shared=False, env=env, grating=cfg.grating())
    shared = rotation.rotation_curves(beam, geom, P, {"sapphire": calib["sapphire"]}, env=env,
                                      grating=cfg.grating())
    rows = [r for c in own.values() for r in c.rows()]
    f_cal = e["rotation_calib_hz"]
    summary = {
        "efficiency": {k: c.eta for k, c in own.items()},
        "intensity_V2_per_m2": {k: c.e2 for k, c in own.items()},
        "slope": {k: c.slope for k, c in own.items()},
        "shared_efficiency_prediction_Hz": {
            k: c.at(calib["grating"][0]) for k, c in shared.items()
        },
        "tip_speed_m_per_s": float(langevin.tip_speed(geom, 2 * np.pi * f_cal)),
    }
    return rows, summary


# --- grating -----------------------------------------------------------------------


def grating_scan(cfg, threads=1):
    beam, geom = cfg.beam(), cfg.geom()
    g = cfg.grating()
    gc = cfg["grating"]
    x = np.arange(0.0, gc["scan_periods"] * g.period - 1e-15, gc["scan_step_nm"] * 1e-9)
    tensor = dumbbell_polarizability(geom)
    rows, summary = [], {"kappa_1_per_um": grating.kappa(1, g.period, beam.wavelength) * 1e-6}
    depth = {}
    for N in (1, 2):
        pts = _pmap(lambda xx: grating.scan_trap_frequency(g, beam, geom, N, [xx], tensor)[0], x, threads)
        for r in pts:
            r["N"] = N
        rows += pts
        fx = np.array([r["f_x_Hz"] for r in pts])
        depth[N] = grating.modulation_depth(fx)
        summary[f"well_{N}"] = {"modulation_depth": depth[N], "mean_f_x_Hz": float(np.mean(fx)),
                                "dominant_period_nm": grating.dominant_period(x, fx) * 1e9}
    summary["second_over_first"] = depth[2] / depth[1]

    from .trap import surface_for_well

    surf = surface_for_well(g, beam, 1)
    xs = np.linspace(-g.period, g.period, 121)
    hs = np.linspace(20e-9, 1.5e-6, 75)
    X, H = np.meshgrid(xs, hs)
    I = grating.nearfield_intensity(surf, beam, X, surf.z_s - H)
    field = {"x_nm": xs * 1e9, "h_nm": hs * 1e9, "I": I}
    return rows, field, summary


# --- casimir -----------------------------------------------------------------------


def casimir_scan(cfg, threads=1):
    geom = cfg.geom()
    c = cfg["casimir"]
    base = cfg.casimir()
    mesh = casimir.check_mesh(base, geom)
    cal = casimir.calibrate(base, geom, c["force_n"], base.separation)
    th, T = casimir.casimir_torque(cal, geom, np.arange(0.0, 360.0, c["theta_step_deg"]), threads)
    d = np.arange(c["d_min_nm"], c["d_max_nm"] + 1e-9, c["d_step_nm"]) * 1e-9
    F = casimir.casimir_force(cal, geom, d)
    ws = np.linspace(c["width_min_nm"], c["width_max_nm"], c["n_widths"]) * 1e-9
    ws, TW, arg = casimir.width_sweep(cal, geom, ws, threads=threads)
    Td = np.array(_pmap(lambda dd: casimir.virtual_torque(cal.with_(separation=dd), geom, c["theta_deg"]),
                        d, threads))
    sphere = casimir.casimir_torque(cal, geom.with_(n_spheres=1), th, threads)[1]
    t_op = casimir.virtual_torque(cal, geom, c["theta_deg"])
    i = int(np.argmax(np.abs(T)))
    summary = {
        "coefficient_J_m6": cal.coefficient,
        "mesh_check": mesh,
        "torque_at_operating_point_Nm": t_op,
        "max_abs_torque_Nm": float(abs(T[i])),
        "theta_of_max_deg": float(th[i]),
        "width_argmax_nm": arg * 1e9,
        "reference_width_nm": 300.0,
        "sphere_max_abs_torque_Nm": float(np.max(np.abs(sphere))),
    }
    tables = {
        "theta": {"theta_deg": th, "torque_Nm": T, "sphere_torque_Nm": sphere},
        "distance": {"d_nm": d * 1e9, "force_N": F, "torque_Nm": Td},
        "width": {"width_nm": ws * 1e9, "torque_Nm": TW},
    }
    return tables, summary
