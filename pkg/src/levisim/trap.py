"""Optical potential of a two-sphere dumbbell in a (partial) standing wave.

The dumbbell is modelled as two coupled point dipoles.  Every quantity
here is a pure function of frozen dataclass inputs, so results are cached
where the same trap is characterised repeatedly.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from . import constants as const
from .errors import CouplingDivergence, NoWellFound, UnstableWell
from .optics import BeamParams, SurfaceSpec, antinode_height, total_field

log = logging.getLogger(__name__)

SILICA_DENSITY = 2200.0
SILICA_PERMITTIVITY = 2.1


@dataclass(frozen=True)
class DumbbellGeom:
    sphere_diameter: float = 144e-9
    density: float = SILICA_DENSITY
    permittivity: float = SILICA_PERMITTIVITY
    n_spheres: int = 2

    def __post_init__(self):
        if self.n_spheres not in (1, 2):
            raise ValueError("n_spheres must be 1 (single sphere) or 2 (dumbbell)")
        if self.sphere_diameter <= 0 or self.density <= 0:
            raise ValueError("sphere diameter and density must be positive")

    @property
    def radius(self):
        return 0.5 * self.sphere_diameter

    @property
    def sphere_mass(self):
        return self.density * 4.0 / 3.0 * np.pi * self.radius**3

    @property
    def mass(self):
        return self.n_spheres * self.sphere_mass

    @property
    def half_length(self):
        """Distance from the centre of mass to the tip."""
        return self.sphere_diameter if self.n_spheres == 2 else self.radius

    @property
    def inertia(self):
        """Moment of inertia about a transverse axis through the centre of mass."""
        a, ms = self.radius, self.sphere_mass
        if self.n_spheres == 1:
            return 0.4 * ms * a * a
        return 2 * (0.4 * ms * a * a + ms * a * a)

    @property
    def spin_inertia(self):
        return self.n_spheres * 0.4 * self.sphere_mass * self.radius**2

    @property
    def sphere_offsets(self):
        """Signed offsets of the sphere centres along the long axis."""
        if self.n_spheres == 1:
            return np.array([0.0])
        return np.array([-self.radius, self.radius])

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class PolarizabilityTensor:
    parallel: complex
    perpendicular: complex
    sphere: complex
    n_spheres: int = 2

    @property
    def anisotropy(self):
        return self.parallel - self.perpendicular


def sphere_polarizability(radius, permittivity, radiation_reaction=False, wavelength=1550e-9):
    """Clausius-Mossotti polarizability ``4 pi eps0 a^3 (eps-1)/(eps+2)`` in C m^2/V."""
    alpha = 4 * np.pi * const.eps0 * radius**3 * (permittivity - 1) / (permittivity + 2)
    if radiation_reaction:
        k = 2 * np.pi / wavelength
        alpha = alpha / (1 - 1j * k**3 * alpha / (6 * np.pi * const.eps0))
    return complex(alpha)


def dumbbell_polarizability(geom: DumbbellGeom) -> PolarizabilityTensor:
    a0 = sphere_polarizability(geom.radius, geom.permittivity)
    if geom.n_spheres == 1:
        return PolarizabilityTensor(a0, a0, a0, 1)
    D = geom.sphere_diameter
    coupling = a0 / (2 * np.pi * const.eps0 * D**3)
    if coupling.real >= 1:
        raise CouplingDivergence(f"dipole coupling {coupling.real:.3f} >= 1")
    par = 2 * a0 / (1 - coupling)
    perp = 2 * a0 / (1 + a0 / (4 * np.pi * const.eps0 * D**3))
    return PolarizabilityTensor(par, perp, a0, 2)


def sphere_positions(geom, com, axis):
    com = np.asarray(com, dtype=float)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    return [com + s * axis for s in geom.sphere_offsets], axis


def potential(geom, tensor, beam, surface, com, axis, gravity=False):
    """Optical potential energy in J; ``com`` may be an array of points."""
    positions, n = sphere_positions(geom, com, axis)
    ap = tensor.parallel.real / tensor.n_spheres
    aq = tensor.perpendicular.real / tensor.n_spheres
    U = 0.0
    for r in positions:
        E = total_field(beam, surface, r).E
        e2 = np.sum(np.abs(E) ** 2, axis=-1)
        en2 = np.abs(np.sum(E * n, axis=-1)) ** 2
        U = U - 0.25 * (ap * en2 + aq * (e2 - en2))
    if gravity:
        U = U + geom.mass * const.g * np.asarray(com)[..., 2]
    return U


def in_kbt(U, T=300.0):
    return U / const.kbt(T)


@dataclass(frozen=True)
class TrapWell:
    index: int
    z: float
    d: float
    depth: float
    f_x: float = float("nan")
    f_y: float = float("nan")
    f_z: float = float("nan")
    f_torsion: float = float("nan")
    x: float = 0.0

    @property
    def depth_kbt(self):
        return in_kbt(self.depth)

    @property
    def position(self):
        return np.array([self.x, 0.0, self.z])

    @property
    def frequencies(self):
        return (self.f_x, self.f_y, self.f_z, self.f_torsion)

    def as_row(self):
        return {
            "N": self.index,
            "d_nm": self.d * 1e9,
            "depth_kBT": self.depth_kbt,
            "f_x_Hz": self.f_x,
            "f_y_Hz": self.f_y,
            "f_z_Hz": self.f_z,
            "f_torsion_Hz": self.f_torsion,
        }


def _axial_profile(geom, tensor, beam, surface, axis):
    def U(z):
        z = np.asarray(z, dtype=float)
        com = np.stack([np.zeros_like(z), np.zeros_like(z), z], axis=-1)
        return potential(geom, tensor, beam, surface, com, axis)

    return U


def _polish_minimum(U, z0, h=1e-9):
    """Golden-section refine to 0.1 nm, then zero the central-difference gradient."""
    res = optimize.minimize_scalar(
        lambda z: float(U(z)), bracket=(z0 - 4e-9, z0, z0 + 4e-9), method="golden",
        options={"xtol": 1e-5},
    )
    z = res.x

    def grad(zz):
        return float((U(zz + h) - U(zz - h)) / (2 * h))

    lo, hi = z - 0.5e-9, z + 0.5e-9
    if grad(lo) < 0 < grad(hi):
        z = optimize.brentq(grad, lo, hi, xtol=1e-22, rtol=4 * np.finfo(float).eps)
    return z


def find_wells(beam, surface, geom, z_range=None, step=None, tensor=None, axis=None):
    """Local minima of the on-axis potential along z, nearest-to-surface first.

    ``z_range`` defaults to the span from the surface to ``3.2 lambda``
    in front of it (or +-3 lambda around the focus without a surface).
    """
    lam = beam.wavelength
    tensor = tensor or dumbbell_polarizability(geom)
    axis = beam.axis_direction() if axis is None else np.asarray(axis, float)
    step = step or lam / 400
    if step > lam / 200:
        raise ValueError("scan step must be <= lambda/200")
    present = surface is not None and surface.present
    if z_range is None:
        if present:
            z_range = (surface.z_s - 3.2 * lam, surface.z_s - 1e-9)
        else:
            fz = beam.focus[2]
            z_range = (fz - 3 * lam, fz + 3 * lam)
    z = np.arange(z_range[0], z_range[1], step)
    U = _axial_profile(geom, tensor, beam, surface, axis)
    u = U(z)
    interior = np.nonzero((u[1:-1] < u[:-2]) & (u[1:-1] <= u[2:]))[0] + 1
    maxima = np.nonzero((u[1:-1] > u[:-2]) & (u[1:-1] >= u[2:]))[0] + 1
    if len(interior) == 0:
        raise NoWellFound("no local minimum of the potential in the scan range")
    wells = []
    for i in interior:
        zm = _polish_minimum(U, z[i])
        left = maxima[maxima < i]
        right = maxima[maxima > i]
        ul = u[left[-1]] if len(left) else u[0]
        ur = u[right[0]] if len(right) else u[-1]
        depth = float(min(ul, ur) - U(zm))
        d = surface.z_s - zm if present else float("inf")
        wells.append((d, zm, depth))
    if present:
        wells.sort(key=lambda w: w[0])
    return [TrapWell(index=i + 1, z=float(zm), d=float(d), depth=depth)
            for i, (d, zm, depth) in enumerate(wells)]


def _second_derivative(f, h):
    """Central second difference with one Richardson step."""
    d1 = (f(h) - 2 * f(0.0) + f(-h)) / h**2
    d2 = (f(2 * h) - 2 * f(0.0) + f(-2 * h)) / (4 * h**2)
    return (4 * d1 - d2) / 3


def stiffness(geom, tensor, beam, surface, position, axis=None, h=1e-9, dtheta=1e-3):
    """Spring constants (k_x, k_y, k_z) in N/m and torsional k_theta in N m/rad."""
    position = np.asarray(position, dtype=float)
    axis = beam.axis_direction() if axis is None else np.asarray(axis, float)

    def along(e):
        return lambda s: float(potential(geom, tensor, beam, surface, position + s * e, axis))

    ks = [_second_derivative(along(e), h) for e in np.eye(3)]
    zhat = np.array([0.0, 0.0, 1.0])
    perp = np.cross(zhat, axis)

    def rotated(t):
        n = np.cos(t) * axis + np.sin(t) * perp
        return float(potential(geom, tensor, beam, surface, position, n))

    k_theta = _second_derivative(rotated, dtheta)
    return np.array(ks), k_theta


def trap_frequencies(well, geom, tensor, beam, surface, axis=None, T=None):
    """(f_x, f_y, f_z, f_torsion) in Hz from the potential curvature at ``well``."""
    pos = well.position if isinstance(well, TrapWell) else np.asarray(well, float)
    ks, kth = stiffness(geom, tensor, beam, surface, pos, axis)
    bad = [name for name, k in zip("xyz", ks) if k <= 0]
    if kth <= 0:
        bad.append("torsion")
    if bad:
        raise UnstableWell(f"non-positive curvature along {', '.join(bad)}")
    f = np.sqrt(ks / geom.mass) / (2 * np.pi)
    ft = np.sqrt(kth / geom.inertia) / (2 * np.pi)
    return float(f[0]), float(f[1]), float(f[2]), float(ft)


def frequency_from_stiffness(k, mass):
    return np.sqrt(k / mass) / (2 * np.pi)


def with_frequencies(well, geom, tensor, beam, surface):
    fx, fy, fz, ft = trap_frequencies(well, geom, tensor, beam, surface)
    return replace(well, f_x=fx, f_y=fy, f_z=fz, f_torsion=ft)


def optical_torque(tensor, e2, theta, mode="linear", eta_cal=1.0):
    """Torque about the beam axis (N m).

    ``e2`` is |E|^2 at the particle.  Linear polarisation gives the
    restoring torque ``-(1/4) Re(da) |E|^2 sin(2 theta)``; circular gives
    the constant drive ``eta_cal (1/4) |da| |E|^2`` regardless of theta.
    """
    da = tensor.anisotropy
    if mode == "linear":
        return -0.25 * da.real * e2 * np.sin(2 * np.asarray(theta))
    if mode == "circular":
        return eta_cal * 0.25 * abs(da) * e2 * np.ones_like(np.asarray(theta, dtype=float))
    raise ValueError(f"unknown polarisation mode {mode!r}")


def local_e2(geom, beam, surface, position, axis=None):
    """|E|^2 averaged over the sphere centres of a particle at ``position``."""
    axis = beam.axis_direction() if axis is None else axis
    positions, _ = sphere_positions(geom, position, axis)
    return float(np.mean([total_field(beam, surface, r).e2 for r in positions]))


# --- calibrated scenario ------------------------------------------------


def free_space_well(beam, geom, tensor=None):
    tensor = tensor or dumbbell_polarizability(geom)
    wells = find_wells(beam, SurfaceSpec.none(), geom, tensor=tensor)
    well = min(wells, key=lambda w: abs(w.z - beam.focus[2]))
    return with_frequencies(well, geom, tensor, beam, SurfaceSpec.none())


@functools.lru_cache(maxsize=64)
def calibrate_waist(beam: BeamParams, geom: DumbbellGeom, target_fz=35e3):
    """Waist for which the free-space axial frequency equals ``target_fz``.

    Only the axial frequency is quoted for free space, so this one-parameter
    least-squares problem reduces to root finding.
    """
    tensor = dumbbell_polarizability(geom)

    def resid(w0):
        b = beam.with_(waist=w0)
        ks, _ = stiffness(geom, tensor, b, SurfaceSpec.none(), np.asarray(b.focus, float))
        return frequency_from_stiffness(ks[2], geom.mass) - target_fz

    lo = beam.wavelength / np.pi * 1.0001
    w0 = optimize.brentq(resid, lo, 10e-6, xtol=1e-14)
    log.info("calibrated waist w0 = %.4e m for f_z = %.1f Hz", w0, target_fz)
    return float(w0)


def surface_for_well(surface, beam, N):
    """Move ``surface`` so its N-th standing-wave antinode sits at the beam focus."""
    r = surface.zeroth_order(beam.wavelength)
    h = antinode_height(r, beam.wavelength, N)
    return surface.with_(z_s=beam.focus[2] + h)


def well_near_focus(beam, surface, geom, N, tensor=None):
    """Characterised trap well N when the surface is placed to load well N."""
    tensor = tensor or dumbbell_polarizability(geom)
    surf = surface_for_well(surface, beam, N)
    wells = find_wells(beam, surf, geom, tensor=tensor)
    if len(wells) < N:
        raise NoWellFound(f"only {len(wells)} wells in front of the surface")
    return with_frequencies(wells[N - 1], geom, tensor, beam, surf), surf


def enhancement_ratio(beam, surface, geom, n_wells=4, tensor=None):
    """Rows of (N, d, R_x, R_y, R_z) relative to the free-space trap."""
    tensor = tensor or dumbbell_polarizability(geom)
    free = free_space_well(beam, geom, tensor)
    rows = []
    for N in range(1, n_wells + 1):
        if surface is None or not surface.present:
            w = free
            d = float("inf")
        else:
            w, _ = well_near_focus(beam, surface, geom, N, tensor)
            d = w.d
        rows.append({
            "N": N,
            "d_nm": d * 1e9,
            "R_x": w.f_x / free.f_x,
            "R_y": w.f_y / free.f_y,
            "R_z": w.f_z / free.f_z,
        })
    return rows
