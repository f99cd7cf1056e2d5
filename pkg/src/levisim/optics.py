"""Paraxial Gaussian beam, normal-incidence Fresnel reflection and the
standing wave formed in front of a reflecting plane.

Coordinates: the beam propagates along +z, the surface is the plane
``z = z_s`` with its normal facing the incoming beam (-z).  All arrays of
points have shape ``(..., 3)`` in metres.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import constants as const
from .errors import InvalidBeam, NoSurface

VALIDITY_WINDOW = 20e-6

SAPPHIRE_INDEX = 1.746 + 0.0j
GOLD_INDEX = 0.52 + 10.7j


def jones_from_waveplate(eta):
    """Jones vector of x-polarised light after a quarter-wave plate at angle ``eta``.

    ``eta = 0`` leaves the beam linearly polarised along x, ``eta = pi/4``
    makes it circular.
    """
    c, s = np.cos(eta), np.sin(eta)
    return np.array([c * c + 1j * s * s, (1 - 1j) * s * c])


@dataclass(frozen=True)
class BeamParams:
    wavelength: float = 1550e-9
    power: float = 0.200
    waist: float = 1.0e-6
    focus: tuple = (0.0, 0.0, 0.0)
    jones: tuple = (1.0 + 0j, 0.0 + 0j)

    def __post_init__(self):
        if self.wavelength <= 0 or self.power <= 0:
            raise InvalidBeam("wavelength and power must be positive")
        if self.waist < self.wavelength / np.pi:
            raise InvalidBeam(
                f"waist {self.waist:.3e} m is below the paraxial bound lambda/pi"
            )
        j = np.asarray(self.jones, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(j) ** 2))
        if norm == 0:
            raise InvalidBeam("Jones vector is zero")
        if abs(norm - 1.0) > 1e-12:
            object.__setattr__(self, "jones", tuple(j / norm))

    @classmethod
    def from_waveplate(cls, eta, **kw):
        return cls(jones=tuple(jones_from_waveplate(eta)), **kw)

    @property
    def k(self):
        return 2 * np.pi / self.wavelength

    @property
    def rayleigh_range(self):
        return np.pi * self.waist**2 / self.wavelength

    @property
    def peak_intensity(self):
        return 2 * self.power / (np.pi * self.waist**2)

    @property
    def jones_vector(self):
        return np.array([self.jones[0], self.jones[1], 0j])

    def with_(self, **changes):
        return replace(self, **changes)

    @property
    def is_circular(self):
        j = np.asarray(self.jones)
        return abs(abs(j[0]) - abs(j[1])) < 1e-9 and abs(np.vdot(j, j[::-1]).real) < 1e-9

    def axis_direction(self):
        """Unit vector along which an anisotropic particle aligns (major axis of the polarisation ellipse)."""
        j = np.asarray(self.jones)
        # maximise |n . J|^2 over real unit n in the xy plane
        a = np.abs(j[0]) ** 2
        b = np.abs(j[1]) ** 2
        cxy = (j[0] * np.conj(j[1])).real
        phi = 0.5 * np.arctan2(2 * cxy, a - b)
        return np.array([np.cos(phi), np.sin(phi), 0.0])


@dataclass
class ComplexField:
    E: np.ndarray
    k: float

    @property
    def intensity(self):
        return 0.5 * const.c * const.eps0 * np.sum(np.abs(self.E) ** 2, axis=-1)

    @property
    def e2(self):
        return np.sum(np.abs(self.E) ** 2, axis=-1)


def _scalar_gaussian(beam, pts):
    """Complex scalar amplitude (V/m) of the paraxial beam at ``pts``."""
    pts = np.asarray(pts, dtype=float)
    f = np.asarray(beam.focus, dtype=float)
    dx = pts[..., 0] - f[0]
    dy = pts[..., 1] - f[1]
    zeta = pts[..., 2] - f[2]
    zr = beam.rayleigh_range
    k = beam.k
    w = beam.waist * np.sqrt(1 + (zeta / zr) ** 2)
    rho2 = dx * dx + dy * dy
    gouy = np.arctan2(zeta, zr)
    phase = k * zeta + k * rho2 * zeta / (2 * (zeta**2 + zr**2)) - gouy
    e0 = np.sqrt(2 * beam.peak_intensity / (const.c * const.eps0))
    return e0 * (beam.waist / w) * np.exp(-rho2 / w**2) * np.exp(1j * phase)


def _check_window(beam, pts):
    f = np.asarray(beam.focus, dtype=float)
    if np.any(np.abs(np.asarray(pts) - f) > VALIDITY_WINDOW):
        raise ValueError("query point outside the +-20 um paraxial validity window")


def focused_field(beam: BeamParams, point) -> ComplexField:
    """Incident paraxial Gaussian field with the beam's Jones polarisation."""
    point = np.asarray(point, dtype=float)
    _check_window(beam, point)
    amp = _scalar_gaussian(beam, point)
    return ComplexField(E=amp[..., None] * beam.jones_vector, k=beam.k)


class SurfaceKind(enum.Enum):
    NONE = "none"
    FLAT_DIELECTRIC = "dielectric"
    FLAT_METAL = "metal"


@dataclass(frozen=True)
class SurfaceSpec:
    kind: SurfaceKind = SurfaceKind.NONE
    index: complex = SAPPHIRE_INDEX
    z_s: float = 0.0

    def __post_init__(self):
        if complex(self.index).imag < 0:
            raise ValueError("passive material requires Im(n) >= 0")

    @classmethod
    def sapphire(cls, z_s=0.0):
        return cls(SurfaceKind.FLAT_DIELECTRIC, SAPPHIRE_INDEX, z_s)

    @classmethod
    def gold(cls, z_s=0.0):
        return cls(SurfaceKind.FLAT_METAL, GOLD_INDEX, z_s)

    @classmethod
    def none(cls):
        return cls(SurfaceKind.NONE)

    @property
    def present(self):
        return self.kind is not SurfaceKind.NONE

    def with_(self, **changes):
        return replace(self, **changes)

    def zeroth_order(self, wavelength):
        """Specular reflection amplitude seen by the trap (0 for no surface)."""
        if not self.present:
            return 0j
        return fresnel_reflection(self, wavelength)

    def reflected(self, beam, pts):
        """Reflected field at ``pts``: the mirror image of the incident beam times r."""
        if not self.present:
            return np.zeros(np.shape(pts)[:-1] + (3,), dtype=complex)
        r = fresnel_reflection(self, beam.wavelength)
        img = mirror_points(pts, self.z_s)
        return (r * _scalar_gaussian(beam, img))[..., None] * beam.jones_vector


def mirror_points(pts, z_s):
    img = np.array(pts, dtype=float, copy=True)
    img[..., 2] = 2 * z_s - img[..., 2]
    return img


def fresnel_reflection(surface: SurfaceSpec, wavelength=None) -> complex:
    """Normal-incidence amplitude reflection coefficient ``(1 - n)/(1 + n)``."""
    if not surface.present:
        raise NoSurface("no reflecting surface configured")
    n = complex(surface.index)
    return (1 - n) / (1 + n)


def antinode_height(r, wavelength, N):
    """Plane-wave distance from the surface of the N-th intensity maximum.

    For a real negative ``r`` this is ``(2N - 1) * wavelength / 4``.
    """
    phi = np.mod(np.angle(r), 2 * np.pi)
    return (2 * np.pi * N - phi) * wavelength / (4 * np.pi)


def total_field(beam: BeamParams, surface, point) -> ComplexField:
    """Incident plus reflected field; ``surface`` may be any object with a
    ``reflected(beam, pts)`` method (flat surfaces or a grating)."""
    point = np.asarray(point, dtype=float)
    inc = focused_field(beam, point)
    if surface is None or not surface.present:
        return inc
    if np.any(point[..., 2] > surface.z_s):
        raise ValueError("query point lies behind the reflecting surface")
    return ComplexField(E=inc.E + surface.reflected(beam, point), k=beam.k)
