"""Near field of a binary gold nanograting and its imprint on the trap.

The grating is described by a square-wave reflection profile ``r(x)``
(stripe amplitude on the gold, substrate amplitude in the grooves).  Its
Fourier orders form a Rayleigh expansion of the reflected field: the 0th
order is the usual mirror beam, every other order of a sub-wavelength
grating is evanescent and decays as ``exp(-kappa_n h)`` away from the
surface.  The Gaussian envelope of the incident beam at the surface
multiplies each order (local plane-wave approximation).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import constants as const
from .errors import NoWellFound, PropagatingOrder
from .optics import GOLD_INDEX, SAPPHIRE_INDEX, _scalar_gaussian, mirror_points, total_field
from .trap import dumbbell_polarizability, find_wells, trap_frequencies


def _fresnel(n):
    n = complex(n)
    return (1 - n) / (1 + n)


@dataclass(frozen=True)
class GratingSpec:
    period: float = 600e-9
    stripe_width: float = 300e-9
    r_stripe: complex = _fresnel(GOLD_INDEX)
    r_groove: complex = _fresnel(SAPPHIRE_INDEX)
    z_s: float = 0.0
    x_offset: float = 0.0
    n_orders: int = 9

    def __post_init__(self):
        if not 0 < self.stripe_width < self.period:
            raise ValueError("stripe width must lie strictly between 0 and the period")

    present = True

    @property
    def duty(self):
        return self.stripe_width / self.period

    def with_(self, **changes):
        return replace(self, **changes)

    def zeroth_order(self, wavelength):
        return complex(self.r_groove + (self.r_stripe - self.r_groove) * self.duty)

    def reflected(self, beam, pts):
        pts = np.asarray(pts, dtype=float)
        orders = reflection_orders(self, beam.wavelength)
        img = mirror_points(pts, self.z_s)
        amp = orders[0][1] * _scalar_gaussian(beam, img)
        at_surface = np.array(pts, copy=True)
        at_surface[..., 2] = self.z_s
        e_s = _scalar_gaussian(beam, at_surface)
        h = self.z_s - pts[..., 2]
        x = pts[..., 0] - self.x_offset
        for n, rn, kappa in orders[1:]:
            if rn == 0:
                continue
            G = 2 * np.pi * n / self.period
            amp = amp + rn * np.exp(1j * G * x) * np.exp(-kappa * h) * e_s
        return amp[..., None] * beam.jones_vector


def uniform_mirror(r, z_s=0.0, period=600e-9):
    """Grating whose stripes and grooves reflect identically (control case)."""
    return GratingSpec(period=period, r_stripe=r, r_groove=r, z_s=z_s)


def reflection_orders(grating: GratingSpec, wavelength):
    """``[(n, r_n, kappa_n), ...]`` for n = 0, +-1, ..., +-n_orders.

    ``kappa_n`` is the evanescent decay constant (1/m); it is 0 for the
    propagating 0th order.
    """
    if grating.period >= wavelength:
        raise PropagatingOrder(
            f"period {grating.period:.3e} m >= wavelength: higher orders propagate"
        )
    f = grating.duty
    dr = grating.r_stripe - grating.r_groove
    k = 2 * np.pi / wavelength
    out = [(0, grating.zeroth_order(wavelength), 0.0)]
    for n in range(1, grating.n_orders + 1):
        rn = complex(dr * np.sin(np.pi * n * f) / (np.pi * n))
        if abs(rn) < 1e-15 * abs(dr if dr else 1):
            rn = 0j
        G = 2 * np.pi * n / grating.period
        kappa = float(np.sqrt(G * G - k * k))
        out.append((n, rn, kappa))
        out.append((-n, rn, kappa))
    return out


def kappa(order, period, wavelength):
    G = 2 * np.pi * order / period
    k = 2 * np.pi / wavelength
    if abs(G) <= k:
        raise PropagatingOrder(f"order {order} propagates")
    return float(np.sqrt(G * G - k * k))


def propagating_flux(grating, wavelength):
    """Reflected power fraction carried by propagating orders (only n = 0 here)."""
    return abs(reflection_orders(grating, wavelength)[0][1]) ** 2


def nearfield_intensity(grating, beam, x, z, y=0.0):
    """Total intensity (W/m^2) at points ``(x, y, z)`` in front of the grating."""
    x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
    pts = np.stack([x, np.full_like(x, y), z], axis=-1)
    return total_field(beam, grating, pts).intensity


def modulation_depth(values):
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / v.mean())


def scan_trap_frequency(grating, beam, geom, well_index, x_grid, tensor=None):
    """Trap frequencies while the particle is scanned laterally over the grating.

    The grating is placed so that antinode ``well_index`` of the 0th order
    sits at the focus; scanning the particle by ``x`` is equivalent to
    shifting the grating by ``-x``.  Returns rows with the local well
    separation and ``f_x``; points where no well is found carry NaN.
    """
    from .trap import surface_for_well

    tensor = tensor or dumbbell_polarizability(geom)
    base = surface_for_well(grating, beam, well_index)
    lam = beam.wavelength
    z_guess = beam.focus[2]
    rows = []
    for x in np.asarray(x_grid, dtype=float):
        g = base.with_(x_offset=base.x_offset - x)
        try:
            hi = min(z_guess + lam / 4, g.z_s - 1e-9)
            wells = find_wells(beam, g, geom, z_range=(z_guess - lam / 4, hi), tensor=tensor)
            w = min(wells, key=lambda w: abs(w.z - z_guess))
            fx, fy, fz, _ = trap_frequencies(w, geom, tensor, beam, g)
            rows.append({"x_nm": x * 1e9, "f_x_Hz": fx, "f_y_Hz": fy, "f_z_Hz": fz,
                         "well_d_nm": w.d * 1e9})
        except NoWellFound as exc:
            rows.append({"x_nm": x * 1e9, "f_x_Hz": np.nan, "f_y_Hz": np.nan, "f_z_Hz": np.nan,
                         "well_d_nm": np.nan, "error": str(exc)})
    return rows


def dominant_period(x, y):
    """Spatial period of the strongest non-DC Fourier component of a uniform scan."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float) - np.mean(y)
    amp = np.abs(np.fft.rfft(y))
    freqs = np.fft.rfftfreq(len(x), d=x[1] - x[0])
    i = int(np.argmax(amp[1:])) + 1
    return float(1.0 / freqs[i])
