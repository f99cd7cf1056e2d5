"""Pairwise-summation surrogate for the Casimir interaction of a dumbbell
with a gold nanograting.

The retarded two-point kernel ``-C / r^7`` is summed over the volume of
the dumbbell and of the gold stripes.  Stripes run along y and are
treated as infinitely long, so the y-integral is done in closed form:
``int dy (rho^2 + y^2)^(-7/2) = (16/15) rho^-6``.  The remaining stripe
cross-section and the sphere volumes use Gauss quadrature.  Pairwise
summation is not additive for real materials, so ``C`` is a calibration
constant fixed from one force value; all angle, width and distance
trends are predictions of the surrogate.

Conventions: the top of the grating is the plane ``z = 0`` with gold in
``-t <= z <= 0``; a stripe is centred under the dumbbell; ``theta`` is the
angle between the dumbbell axis and the stripe direction.
"""

from __future__ import annotations

import concurrent.futures as cf
from dataclasses import dataclass, replace

import numpy as np

from .errors import Interpenetration, MeshNotConverged

Y_INTEGRAL = 16.0 / 15.0
MESH_TOL = 0.02


@dataclass(frozen=True)
class CasimirConfig:
    separation: float = 370e-9
    theta_deg: float = 135.0
    period: float = 600e-9
    stripe_width: float = 300e-9
    thickness: float = 100e-9
    n_periods: int = 7
    sphere_mesh: tuple = (4, 8, 16)
    stripe_mesh: tuple = (12, 6)
    coefficient: float = 1.0

    def __post_init__(self):
        if not 0 <= self.stripe_width <= self.period:
            raise ValueError("stripe width must lie in [0, period]")
        if self.n_periods < 1:
            raise ValueError("at least one period on each side")

    def with_(self, **changes):
        return replace(self, **changes)

    def refined(self):
        """Twice the quadrature density in every direction."""
        return self.with_(sphere_mesh=tuple(2 * n for n in self.sphere_mesh),
                          stripe_mesh=tuple(2 * n for n in self.stripe_mesh))


def _gauss(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def sphere_quadrature(radius, mesh, axis):
    """Volume quadrature of a ball with its polar axis along ``axis``.

    Gauss in r (weight r^2) and in cos(polar angle), trapezoid in azimuth.
    Returns points relative to the centre and weights summing to the volume.
    """
    nr, nmu, nphi = mesh
    r, wr = _gauss(nr, 0.0, radius)
    mu, wmu = _gauss(nmu, -1.0, 1.0)
    phi = (np.arange(nphi) + 0.5) * 2 * np.pi / nphi
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    e1 = np.cross([0.0, 0.0, 1.0], a)
    if np.linalg.norm(e1) < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    R, M, P = np.meshgrid(r, mu, phi, indexing="ij")
    S = np.sqrt(1 - M**2)
    pts = (R * M)[..., None] * a + (R * S * np.cos(P))[..., None] * e1 + (R * S * np.sin(P))[..., None] * e2
    W = (wr[:, None, None] * r[:, None, None] ** 2) * wmu[None, :, None] * (2 * np.pi / nphi)
    W = np.broadcast_to(W, R.shape)
    return pts.reshape(-1, 3), W.ravel().copy()


def body_points(cfg: CasimirConfig, geom, theta_deg=None, center=None):
    """Quadrature points and weights of the particle (body-fixed mesh)."""
    th = np.deg2rad(cfg.theta_deg if theta_deg is None else theta_deg)
    axis = np.array([np.sin(th), np.cos(th), 0.0])
    c = np.array([0.0, 0.0, cfg.separation]) if center is None else np.asarray(center, float)
    rel, w = sphere_quadrature(geom.radius, cfg.sphere_mesh, axis)
    pts = [c + s * axis + rel for s in geom.sphere_offsets]
    return np.concatenate(pts), np.tile(w, len(pts))


def stripe_points(cfg: CasimirConfig):
    """Cross-section quadrature (x, z) of every stripe, weights in m^2."""
    if cfg.stripe_width == 0:
        return np.zeros((0, 2)), np.zeros(0)
    nx, nz = cfg.stripe_mesh
    xs, wx = _gauss(nx, -cfg.stripe_width / 2, cfg.stripe_width / 2)
    zs, wz = _gauss(nz, -cfg.thickness, 0.0)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    W = np.outer(wx, wz)
    centers = cfg.period * np.arange(-cfg.n_periods, cfg.n_periods + 1)
    pts = np.concatenate([np.stack([X.ravel() + xc, Z.ravel()], -1) for xc in centers])
    return pts, np.tile(W.ravel(), len(centers))


def _check(cfg, geom):
    if cfg.separation <= geom.radius:
        raise Interpenetration(
            f"separation {cfg.separation:.3e} m does not clear the particle half-height {geom.radius:.3e} m"
        )


def pairwise_energy(cfg: CasimirConfig, geom, theta_deg=None, separation=None) -> float:
    """Interaction energy in J (negative: attractive)."""
    if separation is not None:
        cfg = cfg.with_(separation=separation)
    _check(cfg, geom)
    if cfg.coefficient == 0 or cfg.stripe_width == 0:
        return 0.0
    bp, bw = body_points(cfg, geom, theta_deg)
    sp, sw = stripe_points(cfg)
    dx = bp[:, None, 0] - sp[None, :, 0]
    dz = bp[:, None, 2] - sp[None, :, 1]
    dx *= dx
    dz *= dz
    dx += dz
    np.reciprocal(dx, out=dx)
    np.power(dx, 3, out=dx)
    total = Y_INTEGRAL * (bw @ dx @ sw)
    return float(-cfg.coefficient * total)


def brute_force_energy(cfg: CasimirConfig, geom, theta_deg=None, voxel=12e-9, stripe_voxel=20e-9,
                       half_length=2.5e-6, separation=None) -> float:
    """Independent check: direct r^-7 sum over voxelised particle and finite stripes."""
    if separation is not None:
        cfg = cfg.with_(separation=separation)
    _check(cfg, geom)
    th = np.deg2rad(cfg.theta_deg if theta_deg is None else theta_deg)
    axis = np.array([np.sin(th), np.cos(th), 0.0])
    c = np.array([0.0, 0.0, cfg.separation])
    a = geom.radius
    g = (np.arange(-np.ceil(a / voxel), np.ceil(a / voxel)) + 0.5) * voxel
    G = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    G = G[np.einsum("ij,ij->i", G, G) <= a * a]
    # rescale so the voxel set has the exact sphere volume
    wv = (4 / 3 * np.pi * a**3) / len(G)
    body = np.concatenate([c + s * axis + G for s in geom.sphere_offsets])
    nx = max(1, int(round(cfg.stripe_width / stripe_voxel)))
    nz = max(1, int(round(cfg.thickness / stripe_voxel)))
    ny = int(round(2 * half_length / stripe_voxel))
    hx, hz, hy = cfg.stripe_width / nx, cfg.thickness / nz, 2 * half_length / ny
    xs = (np.arange(nx) + 0.5) * hx - cfg.stripe_width / 2
    zs = (np.arange(nz) + 0.5) * hz - cfg.thickness
    ys = (np.arange(ny) + 0.5) * hy - half_length
    centers = cfg.period * np.arange(-cfg.n_periods, cfg.n_periods + 1)
    X, Z = np.meshgrid(np.concatenate([xs + xc for xc in centers]), zs, indexing="ij")
    X, Z = X.ravel(), Z.ravel()
    ws = hx * hy * hz
    total = 0.0
    for p in body:
        rho2 = (p[0] - X) ** 2 + (p[2] - Z) ** 2
        r2 = rho2[:, None] + (p[1] - ys)[None, :] ** 2
        total += np.sum(r2**-3.5)
    return float(-cfg.coefficient * total * wv * ws)


# --- derived quantities -----------------------------------------------------


def _map(fn, items, threads):
    if threads and threads > 1:
        with cf.ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def energy_curve(cfg, geom, thetas_deg, threads=1):
    return np.array(_map(lambda t: pairwise_energy(cfg, geom, t), list(thetas_deg), threads))


def casimir_torque(cfg, geom, thetas_deg=None, threads=1):
    """``T = -dE/dtheta`` (N m) by central differences on a periodic theta grid.

    ``thetas_deg`` must be uniform with step <= 5 degrees and span 360.
    """
    if thetas_deg is None:
        thetas_deg = np.arange(0.0, 360.0, 5.0)
    th = np.asarray(thetas_deg, dtype=float)
    step = th[1] - th[0]
    if step > 5.0 + 1e-12 or not np.allclose(np.diff(th), step):
        raise ValueError("theta grid must be uniform with step <= 5 degrees")
    if not np.isclose(th[-1] + step - th[0], 360.0):
        raise ValueError("theta grid must cover one full turn")
    E = energy_curve(cfg, geom, th, threads)
    T = -(np.roll(E, -1) - np.roll(E, 1)) / (2 * np.deg2rad(step))
    return th, T


def virtual_torque(cfg, geom, theta_deg, delta_deg=0.01):
    """Torque from a two-sided virtual rotation about ``theta_deg``."""
    ep = pairwise_energy(cfg, geom, theta_deg + delta_deg)
    em = pairwise_energy(cfg, geom, theta_deg - delta_deg)
    return -(ep - em) / (2 * np.deg2rad(delta_deg))


def casimir_force(cfg, geom, separations, step=1e-9):
    """``F_z = -dE/dd`` (N); negative values pull the particle toward the grating."""
    if step > 10e-9:
        raise ValueError("difference step must be <= 10 nm")
    out = []
    for d in np.asarray(separations, dtype=float):
        ep = pairwise_energy(cfg, geom, separation=d + step)
        em = pairwise_energy(cfg, geom, separation=d - step)
        out.append(-(ep - em) / (2 * step))
    return np.array(out)


def calibrate(cfg, geom, force=3.0e-16, separation=370e-9):
    """Configuration whose coefficient gives ``|F(separation)| = force``."""
    unit = cfg.with_(coefficient=1.0)
    f1 = abs(casimir_force(unit, geom, [separation])[0])
    return cfg.with_(coefficient=force / f1)


def width_sweep(cfg, geom, widths, theta_deg=None, threads=1):
    """Torque at fixed angle and separation versus stripe width.

    Returns ``(widths, torques, argmax width)``.
    """
    th = cfg.theta_deg if theta_deg is None else theta_deg
    ws = np.asarray(widths, dtype=float)
    T = np.array(_map(lambda w: virtual_torque(cfg.with_(stripe_width=w), geom, th), list(ws), threads))
    return ws, T, float(ws[int(np.argmax(np.abs(T)))])


def check_mesh(cfg, geom, theta_deg=None, tol=MESH_TOL):
    """Raise :class:`MeshNotConverged` unless doubling the mesh moves E and T by < ``tol``."""
    th = cfg.theta_deg if theta_deg is None else theta_deg
    fine = cfg.refined()
    e0, e1 = pairwise_energy(cfg, geom, th), pairwise_energy(fine, geom, th)
    t0, t1 = virtual_torque(cfg, geom, th), virtual_torque(fine, geom, th)
    de = abs(e1 / e0 - 1) if e0 else 0.0
    dt = abs(t1 / t0 - 1) if t0 else 0.0
    if de > tol or dt > tol:
        raise MeshNotConverged(f"mesh refinement changed energy by {de:.2%} and torque by {dt:.2%}")
    extended = cfg.with_(n_periods=2 * cfg.n_periods)
    tp = virtual_torque(extended, geom, th)
    dp = abs(tp / t0 - 1) if t0 else 0.0
    if dp > tol:
        raise MeshNotConverged(f"doubling the number of periods changed the torque by {dp:.2%}")
    return {"energy_change": de, "torque_change": dt, "period_change": dp}
