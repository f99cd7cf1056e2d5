"""Driven rotation under circular polarisation.

The drive torque scales with the local field intensity at the trapped
dumbbell, ``M_o = eta (1/4) |alpha_par - alpha_perp| |E|^2``, where the
dimensionless efficiency ``eta`` lumps together absorption and
birefringence details that the dipole model does not capture.  It is
fixed from a single measured (pressure, frequency) point; the
balance against gas friction then gives ``f_rot = M_o / (2 pi I gamma)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .damping import Environment, rotational_damping
from .langevin import steady_state_rotation
from .optics import BeamParams, SurfaceSpec
from .trap import dumbbell_polarizability, find_wells, local_e2, surface_for_well

SURFACES = ("free", "sapphire", "grating")


def circular_beam(beam: BeamParams) -> BeamParams:
    return BeamParams.from_waveplate(np.pi / 4, wavelength=beam.wavelength, power=beam.power,
                                     waist=beam.waist, focus=beam.focus)


def make_surface(kind, grating=None):
    from .grating import GratingSpec

    if kind == "free":
        return SurfaceSpec.none()
    if kind == "sapphire":
        return SurfaceSpec.sapphire()
    if kind == "grating":
        return grating or GratingSpec()
    raise ValueError(f"unknown surface case {kind!r}")


def trap_intensity(beam, surface, geom, well=1, n_phase=12):
    """Mean |E|^2 over the sphere centres of a dumbbell spinning in well ``well``.

    For a grating the value is also averaged over one period of lateral
    position, since the particle is not registered to the stripes.
    """
    beam = circular_beam(beam)
    tensor = dumbbell_polarizability(geom)
    if not surface.present:
        pos = np.asarray(beam.focus, dtype=float)
        surf = surface
    else:
        surf = surface_for_well(surface, beam, well)
        wells = find_wells(beam, surf, geom, tensor=tensor)
        pos = np.array([0.0, 0.0, wells[well - 1].z])
    angles = np.linspace(0, np.pi, n_phase, endpoint=False)
    offsets = [0.0]
    if hasattr(surf, "period"):
        offsets = np.linspace(0, surf.period, 8, endpoint=False)
    vals = []
    for off in offsets:
        s = surf.with_(x_offset=surf.x_offset + off) if hasattr(surf, "period") else surf
        for a in angles:
            vals.append(local_e2(geom, beam, s, pos, np.array([np.cos(a), np.sin(a), 0.0])))
    return float(np.mean(vals))


def drive_torque(geom, e2, eta):
    da = dumbbell_polarizability(geom).anisotropy
    return eta * 0.25 * abs(da) * e2


def rotation_frequency(geom, env, e2, eta):
    gamma, _ = rotational_damping(env, geom)
    return steady_state_rotation(drive_torque(geom, e2, eta), geom.inertia, gamma) / (2 * np.pi)


def calibrate_efficiency(geom, env, e2, target_hz):
    """Efficiency for which the model spins at ``target_hz`` in ``env``.

    ``f_rot`` is linear in ``eta``, so one evaluation suffices.
    """
    return target_hz / rotation_frequency(geom, env, e2, 1.0)


@dataclass
class RotationCurve:
    surface: str
    pressures: np.ndarray
    f_rot: np.ndarray
    eta: float
    e2: float
    geom: object = None
    env: Environment | None = None

    @property
    def slope(self):
        return loglog_slope(self.pressures, self.f_rot)

    def at(self, pressure_torr):
        """Model rotation frequency at any pressure, not only on the grid."""
        return float(rotation_frequency(self.geom, self.env.at(pressure_torr), self.e2, self.eta))

    def rows(self):
        return [{"surface": self.surface, "P_torr": p, "f_rot_Hz": f} for p, f in zip(self.pressures, self.f_rot)]


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def rotation_curve(geom, e2, eta, pressures, label="", env=None):
    env = env or Environment(1.0)
    P = np.asarray(pressures, dtype=float)
    f = np.array([rotation_frequency(geom, env.at(p), e2, eta) for p in P])
    return RotationCurve(label, P, f, eta, e2, geom, env)


def rotation_curves(beam, geom, pressures, calibration, surfaces=SURFACES, shared=True,
                    env=None, grating=None):
    """f_rot(P) for each surface case.

    ``calibration`` maps a surface case to ``(pressure_torr, f_rot_hz)``.
    With ``shared`` one efficiency (from the first calibrated case) is used
    for every surface, so the curves differ only through the local
    intensity; otherwise each calibrated case gets its own efficiency.
    """
    env = env or Environment(1.0)
    e2 = {s: trap_intensity(beam, make_surface(s, grating), geom) for s in surfaces}
    etas = {}
    for s, (p, f) in calibration.items():
        etas[s] = calibrate_efficiency(geom, env.at(p), e2[s], f)
    first = next(iter(calibration))
    out = {}
    for s in surfaces:
        eta = etas[first] if shared or s not in etas else etas[s]
        out[s] = rotation_curve(geom, e2[s], eta, pressures, s, env)
    return out
