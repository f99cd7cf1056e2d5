"""Free-molecular gas damping of spheres and two-sphere dumbbells.

Translational and rotational drag of the dumbbell come from a
deterministic linear-response calculation over the surfaces of both
spheres: every incoming ray is traced back to either the free gas or the
other sphere, diffuse re-emission is solved self-consistently as a
linear system and specular bounces are followed along their chains.
Isolated spheres use the closed Epstein forms.

Forces are computed in units of ``mu n vbar a^2 V`` (torques in
``mu n vbar a^4 Omega``), where ``mu n vbar = 8 P / (pi vbar)``.  The
dimensionless coefficients depend only on geometry and accommodation and
are cached.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from . import constants as const
from .errors import QuadratureNonConvergence, RegimeViolation

KNUDSEN_THRESHOLD = 10.0
CONVERGENCE_TOL = 5e-3


@dataclass(frozen=True)
class Environment:
    """Gas state.  Pressure is given in Torr and converted to Pa internally."""

    pressure_torr: float
    temperature: float = 300.0
    gas_mass: float = const.AIR_MOLECULE_MASS
    accommodation: float = 1.0
    molecule_diameter: float = const.AIR_MOLECULE_DIAMETER

    def __post_init__(self):
        if self.pressure_torr <= 0 or self.temperature <= 0:
            raise ValueError("pressure and temperature must be positive")
        if not 0.0 <= self.accommodation <= 1.0:
            raise ValueError("accommodation coefficient must lie in [0, 1]")

    @property
    def pressure(self):
        return const.torr_to_pa(self.pressure_torr)

    @property
    def mean_speed(self):
        return np.sqrt(8 * const.kB * self.temperature / (np.pi * self.gas_mass))

    @property
    def mean_free_path(self):
        return const.kB * self.temperature / (
            np.sqrt(2) * np.pi * self.molecule_diameter**2 * self.pressure
        )

    @property
    def momentum_flux_scale(self):
        """``mu n vbar`` in kg m^-2 s^-1."""
        return 8 * self.pressure / (np.pi * self.mean_speed)

    def knudsen(self, length):
        return self.mean_free_path / length

    def at(self, pressure_torr):
        return replace(self, pressure_torr=pressure_torr)


@dataclass(frozen=True)
class DampingRates:
    parallel: float
    perpendicular: float
    rotational: float

    @property
    def tau(self):
        return 1.0 / self.rotational

    @property
    def anisotropy(self):
        return self.perpendicular / self.parallel

    def com_rates(self, axis=(1.0, 0.0, 0.0)):
        """(Gamma_x, Gamma_y, Gamma_z) for a body whose long axis is ``axis``."""
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        return self.perpendicular + (self.parallel - self.perpendicular) * n**2


def _check_regime(env, length):
    if env.knudsen(length) < KNUDSEN_THRESHOLD:
        warnings.warn(
            f"Kn = {env.knudsen(length):.3g} at {env.pressure_torr:g} Torr: "
            "outside the free-molecular regime",
            RegimeViolation,
            stacklevel=3,
        )


# --- closed forms for an isolated sphere --------------------------------


def epstein_coefficient(accommodation=1.0):
    return 1.0 + accommodation * np.pi / 8


def sphere_com_damping(env: Environment, radius, density=2200.0):
    """Epstein damping rate ``(8/pi) P / (rho a vbar) * (1 + sigma pi/8)`` in 1/s."""
    _check_regime(env, 2 * radius)
    return (8 / np.pi) * env.pressure / (density * radius * env.mean_speed) * epstein_coefficient(
        env.accommodation
    )


def sphere_spin_damping(env: Environment, radius, density=2200.0):
    """Rotational damping of a sphere about its own centre: ``10 sigma P/(pi rho a vbar)``."""
    _check_regime(env, 2 * radius)
    return 10 * env.accommodation * env.pressure / (np.pi * density * radius * env.mean_speed)


# --- linear-response surface quadrature ----------------------------------


def _sphere_grid(nu, nphi):
    u = (np.arange(nu) + 0.5) / nu * 2 - 1
    phi = (np.arange(nphi) + 0.5) / nphi * 2 * np.pi
    U, P = np.meshgrid(u, phi, indexing="ij")
    s = np.sqrt(1 - U**2)
    # polar axis along x, the long axis of the body
    n = np.stack([U, s * np.cos(P), s * np.sin(P)], -1).reshape(-1, 3)
    return n, 4 * np.pi / (nu * nphi)


def _hemisphere_quadrature(nmu, nphi):
    x, w = np.polynomial.legendre.leggauss(nmu)
    mu, wmu = 0.5 * (x + 1), 0.5 * w
    phi = (np.arange(nphi) + 0.5) / nphi * 2 * np.pi
    M, P = np.meshgrid(mu, phi, indexing="ij")
    W = np.repeat(wmu[:, None], nphi, 1) * (2 * np.pi / nphi)
    return M.ravel(), P.ravel(), W.ravel()


def _ray_sphere(p, d, c, a):
    oc = p - c
    b = np.einsum("ij,ij->i", oc, d)
    cc = np.einsum("ij,ij->i", oc, oc) - a * a
    disc = b * b - cc
    t = -b - np.sqrt(np.maximum(disc, 0.0))
    return (disc > 0) & (t > 1e-9 * a), t


def _interp(q, nu, nphi):
    u = np.clip(q[:, 0], -1, 1)
    phi = np.mod(np.arctan2(q[:, 2], q[:, 1]), 2 * np.pi)
    fu = (u + 1) / 2 * nu - 0.5
    fp = phi / (2 * np.pi) * nphi - 0.5
    iu0 = np.floor(fu).astype(int)
    ip0 = np.floor(fp).astype(int)
    tu, tp = fu - iu0, fp - ip0
    iu0c, iu1c = np.clip(iu0, 0, nu - 1), np.clip(iu0 + 1, 0, nu - 1)
    ip0c, ip1c = ip0 % nphi, (ip0 + 1) % nphi
    idx = (iu0c * nphi + ip0c, iu0c * nphi + ip1c, iu1c * nphi + ip0c, iu1c * nphi + ip1c)
    wts = ((1 - tu) * (1 - tp), (1 - tu) * tp, tu * (1 - tp), tu * tp)
    return idx, wts


def surface_forces(centers, velocity, accommodation=1.0, resolution=(16, 32, 10, 20), max_bounces=12):
    """First-order gas force on each surface element of a cluster of unit spheres.

    ``velocity(points)`` gives the wall velocity at surface points (gas at
    rest).  Returns ``(points, forces)``; forces are in units of
    ``mu n vbar`` times velocity times area (unit radius).
    """
    nu, nphi, nmu, ndphi = resolution
    sigma = float(accommodation)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    ns = len(centers)
    nloc, area = _sphere_grid(nu, nphi)
    M, P, W = _hemisphere_quadrature(nmu, ndphi)
    ne, nd = nu * nphi, len(M)
    N = ns * ne
    pts = np.concatenate([c + nloc for c in centers])
    nrm = np.tile(nloc, (ns, 1))
    Uw = velocity(pts)

    ref = np.where(np.abs(nrm[:, :1]) < 0.9, [[1.0, 0, 0]], [[0, 1.0, 0]])
    t1 = np.cross(nrm, ref)
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(nrm, t1)
    st = np.sqrt(1 - M**2)
    # d points from the surface towards where an arriving molecule came from
    d = (
        (st * np.cos(P))[None, :, None] * t1[:, None, :]
        + (st * np.sin(P))[None, :, None] * t2[:, None, :]
        + M[None, :, None] * nrm[:, None, :]
    ).reshape(-1, 3)
    omega = -d
    R = N * nd
    owner = np.repeat(np.arange(N), nd)
    wcos = np.tile(W * M, N)
    wcos2 = np.tile(W * M * M, N)

    b = np.zeros(R)
    rows, cols, vals = [], [], []
    cur_p = np.repeat(pts, nd, 0)
    cur_d = d.copy()
    cur_w = np.ones(R)
    cur_s = np.repeat(np.repeat(np.arange(ns), ne), nd)
    live = np.arange(R)
    for _ in range(max_bounces):
        p, dd, s_ = cur_p[live], cur_d[live], cur_s[live]
        best_t = np.full(len(live), np.inf)
        best_k = np.full(len(live), -1)
        for k, c in enumerate(centers):
            hit, t = _ray_sphere(p, dd, c, 1.0)
            hit &= s_ != k
            upd = hit & (t < best_t)
            best_t[upd] = t[upd]
            best_k[upd] = k
        m = best_k >= 0
        live = live[m]
        if len(live) == 0:
            break
        kk = best_k[m]
        q = p[m] + best_t[m, None] * dd[m]
        nq = q - centers[kk]
        Uq = velocity(q)
        om = -dd[m]
        w = cur_w[live]
        # diffuse emission from a moving wall: psi = 2 beta c.U + delta_k
        b[live] += w * sigma * np.einsum("ij,ij->i", om, Uq)
        if sigma > 0:
            idx, wts = _interp(nq, nu, nphi)
            for ii, ww in zip(idx, wts):
                rows.append(live)
                cols.append(kk * ne + ii)
                vals.append(w * sigma * ww)
        # specular: psi_out = psi_in + 4 beta u (n.U)(n.omega_out)
        nU = np.einsum("ij,ij->i", nq, Uq)
        nw = np.einsum("ij,ij->i", nq, om)
        b[live] += w * (1 - sigma) * 2 * nU * nw
        cur_d[live] = -(om - 2 * nw[:, None] * nq)
        cur_p[live] = q
        cur_s[live] = kk
        cur_w[live] = w * (1 - sigma)
        if sigma == 1.0:
            break

    if vals:
        S = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(R, N)
        )
    else:
        S = sp.csr_matrix((R, N))
    agg = sp.csr_matrix((wcos / np.pi, (owner, np.arange(R))), shape=(N, R))
    Un = np.einsum("ij,ij->i", Uw, nrm)
    src = 2 * Un + 3 * (agg @ b)
    if sigma > 0:
        K = (agg @ S).toarray()
        delta = np.linalg.solve(np.eye(N) - K, src)
    else:
        delta = np.zeros(N)
    ray_delta = S @ delta

    def per_element(x):
        return np.bincount(owner, weights=x, minlength=N)

    om_b = np.stack([per_element(omega[:, j] * wcos * b) for j in range(3)], 1)
    om_d = np.stack([per_element(omega[:, j] * wcos * ray_delta) for j in range(3)], 1)
    c2_b = per_element(wcos2 * b)
    c2_d = per_element(wcos2 * ray_delta)

    diffuse = (
        -0.25 * Un[:, None] * nrm
        + om_b / np.pi
        + 3 / 32 * om_d
        - 0.25 * (np.pi / 4 * delta[:, None] * nrm + Uw)
    )
    specular = 2 * nrm * (-(c2_b / np.pi) - 3 / 32 * c2_d - 0.5 * Un)[:, None]
    return pts, (sigma * diffuse + (1 - sigma) * specular) * area


def _dumbbell_centers():
    return np.array([[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


def _coefficients_at(accommodation, resolution):
    c = _dumbbell_centers()
    _, fpar = surface_forces(c, lambda p: np.broadcast_to([1.0, 0, 0], p.shape), accommodation, resolution)
    _, fperp = surface_forces(c, lambda p: np.broadcast_to([0, 1.0, 0], p.shape), accommodation, resolution)
    pts, frot = surface_forces(c, lambda p: np.cross([0, 0, 1.0], p), accommodation, resolution)
    return np.array([
        -fpar.sum(0)[0],
        -fperp.sum(0)[1],
        -np.cross(pts, frot).sum(0)[2],
    ])


def _refined(resolution):
    nu, nphi, nmu, ndphi = resolution
    s = np.sqrt(2)
    return (int(round(nu * s)), int(round(nphi * s)), int(round(nmu * s)), int(round(ndphi * s)))


@functools.lru_cache(maxsize=16)
def dumbbell_drag_coefficients(accommodation=1.0, resolution=(16, 32, 10, 20), check=True):
    """Dimensionless (parallel, perpendicular, rotational) drag of two touching spheres.

    With ``check`` the calculation is repeated with twice the surface and
    direction sample density; a change above 0.5 % raises
    :class:`QuadratureNonConvergence`.
    """
    coef = _coefficients_at(accommodation, resolution)
    if check:
        fine = _coefficients_at(accommodation, _refined(resolution))
        change = np.max(np.abs(fine / coef - 1))
        if change > CONVERGENCE_TOL:
            raise QuadratureNonConvergence(
                f"drag coefficients changed by {change:.2%} under refinement"
            )
        coef = fine
    return tuple(float(x) for x in coef)


def dumbbell_com_damping(env: Environment, geom):
    """(Gamma_parallel, Gamma_perpendicular) in 1/s for motion along / across the long axis."""
    a = geom.radius
    if geom.n_spheres == 1:
        g = sphere_com_damping(env, a, geom.density)
        return g, g
    _check_regime(env, 2 * geom.sphere_diameter)
    cpar, cperp, _ = dumbbell_drag_coefficients(env.accommodation)
    scale = env.momentum_flux_scale * a * a / geom.mass
    return cpar * scale, cperp * scale


def rotational_damping(env: Environment, geom):
    """(gamma, tau) for rotation about a transverse axis through the centre of mass."""
    a = geom.radius
    if geom.n_spheres == 1:
        g = sphere_spin_damping(env, a, geom.density)
    else:
        _check_regime(env, 2 * geom.sphere_diameter)
        crot = dumbbell_drag_coefficients(env.accommodation)[2]
        g = crot * env.momentum_flux_scale * a**4 / geom.inertia
    return g, (1.0 / g if g > 0 else float("inf"))


def damping_rates(env: Environment, geom) -> DampingRates:
    par, perp = dumbbell_com_damping(env, geom)
    gamma, _ = rotational_damping(env, geom)
    return DampingRates(par, perp, gamma)


def proximity_correction(env: Environment, d, size=144e-9):
    """Multiplicative damping correction for a particle at separation ``d`` from a wall.

    Exactly 1 while the mean free path exceeds both the particle size and
    the separation by the Knudsen threshold; otherwise the continuum
    wall correction for motion normal to the wall, ``1 + 9 a / (8 d)``.
    """
    if d <= 0:
        raise ValueError("separation must be positive")
    if env.knudsen(size) >= KNUDSEN_THRESHOLD and env.knudsen(d) >= KNUDSEN_THRESHOLD:
        return 1.0
    return 1.0 + 9.0 * (0.5 * size) / (8.0 * d)
