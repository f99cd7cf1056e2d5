"""Underdamped Langevin dynamics of a levitated dumbbell.

The centre of mass and the orientation of the long axis (a linear rotor)
are advanced with the BAOAB splitting of the stochastic velocity-Verlet
scheme.  The Ornstein-Uhlenbeck part is integrated exactly, so the
noise strength follows fluctuation-dissipation with the gas damping rates
for any step size.  Harmonic traps use a compiled kernel; arbitrary traps
go through the generic Python :func:`step`.

Driven GHz rotation is never resolved in time: it is described by the
torque balance ``M_o = I gamma Omega``, with an exact OU generator for the
thermal fluctuations of the spin rate.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, is_dataclass, replace

import numba
import numpy as np
from scipy import linalg, optimize

from . import constants as const
from .damping import DampingRates, Environment, damping_rates
from .errors import NonFinite, ParticleLost
from .trap import DumbbellGeom, potential, stiffness

CHUNK = 1 << 16
N_NOISE = 6

CHANNELS = ("x", "y", "z", "theta_torsion", "omega_rot")


# --- state and traps ----------------------------------------------------


@dataclass
class RotorState:
    r: np.ndarray
    v: np.ndarray
    axis: np.ndarray
    omega: np.ndarray
    t: float = 0.0

    @classmethod
    def at_rest(cls, position=(0.0, 0.0, 0.0), axis=(1.0, 0.0, 0.0)):
        n = np.asarray(axis, dtype=float)
        return cls(
            np.array(position, dtype=float),
            np.zeros(3),
            n / np.linalg.norm(n),
            np.zeros(3),
        )

    def copy(self):
        return RotorState(self.r.copy(), self.v.copy(), self.axis.copy(), self.omega.copy(), self.t)


@dataclass(frozen=True)
class HarmonicTrap:
    """Quadratic expansion of an optical trap about its minimum.

    The orientation energy is ``-(k_theta/2) |n . J|^2`` with ``J`` the
    (complex, unit) polarisation vector, so ``k_theta`` is the small-angle
    torsional spring constant for linear polarisation.  ``drive`` is a
    constant lab-frame torque (N m), e.g. from circularly polarised light.
    """

    k: tuple = (1e-6, 1e-6, 1e-6)
    center: tuple = (0.0, 0.0, 0.0)
    k_theta: float = 0.0
    jones: tuple = (1.0 + 0j, 0j, 0j)
    drive: tuple = (0.0, 0.0, 0.0)
    box: tuple = (3e-6, 3e-6, 4.65e-6)

    @classmethod
    def from_well(cls, geom, tensor, beam, surface, position, box=None):
        """Harmonic trap with the curvature of the computed potential at ``position``."""
        axis = beam.axis_direction()
        ks, kth = stiffness(geom, tensor, beam, surface, position, axis)
        box = box or default_box(beam)
        return cls(tuple(ks), tuple(np.asarray(position, float)), float(kth),
                   tuple(complex(c) for c in np.append(np.asarray(beam.jones), 0)), (0.0, 0.0, 0.0), box)

    def force_torque(self, r, n):
        F = -np.asarray(self.k) * (r - np.asarray(self.center))
        J = np.asarray(self.jones, dtype=complex)
        tau = np.cross(n, self.k_theta * np.real(np.conj(J) * np.dot(n, J))) + np.asarray(self.drive)
        return F, tau

    def frequencies(self, mass, inertia):
        f = np.sqrt(np.asarray(self.k) / mass) / (2 * np.pi)
        ft = math.sqrt(max(self.k_theta, 0.0) / inertia) / (2 * np.pi)
        return np.append(f, ft)


@dataclass(frozen=True)
class OpticalTrap:
    """Full dipole potential; forces and torques by central differences."""

    geom: DumbbellGeom
    tensor: object
    beam: object
    surface: object
    h: float = 1e-10
    box: tuple = (3e-6, 3e-6, 4.65e-6)
    center: tuple = (0.0, 0.0, 0.0)
    drive: tuple = (0.0, 0.0, 0.0)

    def _U(self, r, n):
        return float(potential(self.geom, self.tensor, self.beam, self.surface, r, n))

    def force_torque(self, r, n):
        h = self.h
        F = np.empty(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            F[i] = -(self._U(r + e, n) - self._U(r - e, n)) / (2 * h)
        gU = np.empty(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1e-6
            gU[i] = (self._U(r, n + e) - self._U(r, n - e)) / 2e-6
        return F, np.cross(n, -gU) + np.asarray(self.drive)


def default_box(beam):
    """Escape box half-widths: three waists across, three wavelengths along the beam."""
    return (3 * beam.waist, 3 * beam.waist, 3 * beam.wavelength)


@dataclass(frozen=True)
class SimConfig:
    dt: float
    n_steps: int
    trap: object
    geom: DumbbellGeom = DumbbellGeom()
    env: Environment = Environment(1.5)
    seed: int = 0
    stride: int = 1
    thermal: bool = True
    gravity: bool = False
    rates: DampingRates | None = None
    initial: tuple | None = None
    stream: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.n_steps < 1 or self.stride < 1:
            raise ValueError("dt, n_steps and stride must be positive")
        if isinstance(self.trap, HarmonicTrap):
            fmax = float(np.max(self.trap.frequencies(self.geom.mass, self.geom.inertia)))
            if fmax > 0 and self.dt > 1 / (50 * fmax):
                raise ValueError(
                    f"dt = {self.dt:.3g} s exceeds 1/(50 f_max) = {1 / (50 * fmax):.3g} s"
                )

    def damping(self):
        return self.rates if self.rates is not None else damping_rates(self.env, self.geom)

    def with_(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return _plain(self)

    def hash(self):
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _plain(obj):
    if is_dataclass(obj):
        out = {"type": type(obj).__name__}
        for k in obj.__dataclass_fields__:
            out[k] = _plain(getattr(obj, k))
        return out
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(x) for x in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str, bool)):
        return obj.value
    if obj is None or isinstance(obj, (int, float, str, bool)):
        return obj
    return repr(obj)


@dataclass
class TimeSeries:
    dt: float
    channels: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise ValueError("channels differ in length")

    def __len__(self):
        return len(next(iter(self.channels.values()))) if self.channels else 0

    def __getitem__(self, name):
        return self.channels[name]

    @property
    def t(self):
        return np.arange(len(self)) * self.dt

    def rms(self, name):
        x = np.asarray(self.channels[name])
        return float(np.sqrt(np.mean((x - x.mean()) ** 2)))

    def to_csv(self, path, header=()):
        from .io import write_csv

        cols = {"t_s": self.t}
        cols.update(self.channels)
        meta = dict(self.metadata)
        meta["dt"] = self.dt
        write_csv(path, cols, meta, header)

    def to_json(self, path):
        payload = {"metadata": dict(self.metadata, dt=self.dt),
                   "channels": {k: np.asarray(v).tolist() for k, v in self.channels.items()}}
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)


# --- integrator ---------------------------------------------------------


def _coefficients(cfg):
    rates = cfg.damping()
    kT = const.kbt(cfg.env.temperature) if cfg.thermal else 0.0
    m, I = cfg.geom.mass, cfg.geom.inertia
    dt = cfg.dt

    def ou(g, mass):
        c = math.exp(-g * dt)
        return c, math.sqrt(kT / mass * (1 - c * c))

    cpar, spar = ou(rates.parallel, m)
    cperp, sperp = ou(rates.perpendicular, m)
    crot, srot = ou(rates.rotational, I)
    return np.array([cpar, spar, cperp, sperp, crot, srot])


def _rotate(n, w, dt):
    wn = np.linalg.norm(w)
    if wn == 0:
        return n
    phi = wn * dt
    n2 = n * math.cos(phi) + np.cross(w / wn, n) * math.sin(phi)
    return n2 / np.linalg.norm(n2)


def _gravity(cfg):
    return np.array([0.0, 0.0, -cfg.geom.mass * const.g]) if cfg.gravity else np.zeros(3)


def step(state: RotorState, config: SimConfig, rng, coeffs=None) -> RotorState:
    """Advance ``state`` by one BAOAB step of length ``config.dt``.

    ``rng`` is a :class:`numpy.random.Generator` supplying the six unit
    normals per step.
    """
    c = _coefficients(config) if coeffs is None else coeffs
    cpar, spar, cperp, sperp, crot, srot = c
    m, I, dt = config.geom.mass, config.geom.inertia, config.dt
    Fg = _gravity(config)
    s = state.copy()
    xi = rng.standard_normal(N_NOISE)

    F, tau = config.trap.force_torque(s.r, s.axis)
    s.v += 0.5 * dt * (F + Fg) / m
    s.omega += 0.5 * dt * tau / I
    s.omega -= np.dot(s.omega, s.axis) * s.axis
    s.r += 0.5 * dt * s.v
    s.axis = _rotate(s.axis, s.omega, 0.5 * dt)

    n = s.axis
    vp = np.dot(s.v, n)
    vq = s.v - vp * n
    xp = np.dot(xi[:3], n)
    s.v = (cpar * vp + spar * xp) * n + cperp * vq + sperp * (xi[:3] - xp * n)
    xr = xi[3:] - np.dot(xi[3:], n) * n
    s.omega = crot * (s.omega - np.dot(s.omega, n) * n) + srot * xr

    s.r += 0.5 * dt * s.v
    s.axis = _rotate(s.axis, s.omega, 0.5 * dt)
    F, tau = config.trap.force_torque(s.r, s.axis)
    s.v += 0.5 * dt * (F + Fg) / m
    s.omega += 0.5 * dt * tau / I
    s.omega -= np.dot(s.omega, s.axis) * s.axis
    s.t = state.t + dt

    if not (np.all(np.isfinite(s.r)) and np.all(np.isfinite(s.omega))):
        raise NonFinite("non-finite state")
    center = np.asarray(getattr(config.trap, "center", np.zeros(3)))
    if np.any(np.abs(s.r - center) > np.asarray(config.trap.box)):
        raise ParticleLost("particle left the simulation box")
    return s


@numba.njit(cache=True)
def _fold(s, c):
    # head and tail are equivalent: torsion angle lives in (-pi/2, pi/2]
    if c == 0.0:
        return 0.5 * math.pi
    return math.atan(s / c)


@numba.njit(cache=True)
def _drift(r, n, v, w, h):
    for j in range(3):
        r[j] += h * v[j]
    wn = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    if wn > 0.0:
        cp, sp = math.cos(wn * h), math.sin(wn * h)
        u0, u1, u2 = w[0] / wn, w[1] / wn, w[2] / wn
        a0 = n[0] * cp + (u1 * n[2] - u2 * n[1]) * sp
        a1 = n[1] * cp + (u2 * n[0] - u0 * n[2]) * sp
        a2 = n[2] * cp + (u0 * n[1] - u1 * n[0]) * sp
        nn = math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)
        n[0], n[1], n[2] = a0 / nn, a1 / nn, a2 / nn


@numba.njit(cache=True)
def _kick(r, n, v, w, k, c0, kth, Jr, Ji, drive, Fg, m, I, h):
    pr = n[0] * Jr[0] + n[1] * Jr[1] + n[2] * Jr[2]
    pi = n[0] * Ji[0] + n[1] * Ji[1] + n[2] * Ji[2]
    g0 = kth * (Jr[0] * pr + Ji[0] * pi)
    g1 = kth * (Jr[1] * pr + Ji[1] * pi)
    g2 = kth * (Jr[2] * pr + Ji[2] * pi)
    t0 = n[1] * g2 - n[2] * g1 + drive[0]
    t1 = n[2] * g0 - n[0] * g2 + drive[1]
    t2 = n[0] * g1 - n[1] * g0 + drive[2]
    for j in range(3):
        v[j] += h * (-k[j] * (r[j] - c0[j]) + Fg[j]) / m
    w[0] += h * t0 / I
    w[1] += h * t1 / I
    w[2] += h * t2 / I
    wp = w[0] * n[0] + w[1] * n[1] + w[2] * n[2]
    for j in range(3):
        w[j] -= wp * n[j]


@numba.njit(cache=True)
def _harmonic_kernel(r, v, n, w, k, c0, kth, Jr, Ji, drive, Fg, box, m, I, dt, co,
                     noise, phase, stride, out, out_pos, e1, e2):
    """BAOAB steps over one noise chunk.  Returns (steps done, status)."""
    cpar, spar, cperp, sperp, crot, srot = co[0], co[1], co[2], co[3], co[4], co[5]
    h = 0.5 * dt
    for it in range(noise.shape[0]):
        _kick(r, n, v, w, k, c0, kth, Jr, Ji, drive, Fg, m, I, h)
        _drift(r, n, v, w, h)
        vp = v[0] * n[0] + v[1] * n[1] + v[2] * n[2]
        xp = noise[it, 0] * n[0] + noise[it, 1] * n[1] + noise[it, 2] * n[2]
        xr = noise[it, 3] * n[0] + noise[it, 4] * n[1] + noise[it, 5] * n[2]
        wp = w[0] * n[0] + w[1] * n[1] + w[2] * n[2]
        for j in range(3):
            vq = v[j] - vp * n[j]
            v[j] = (cpar * vp + spar * xp) * n[j] + cperp * vq + sperp * (noise[it, j] - xp * n[j])
            w[j] = crot * (w[j] - wp * n[j]) + srot * (noise[it, 3 + j] - xr * n[j])
        _drift(r, n, v, w, h)
        _kick(r, n, v, w, k, c0, kth, Jr, Ji, drive, Fg, m, I, h)

        for j in range(3):
            if not (math.isfinite(r[j]) and math.isfinite(v[j]) and math.isfinite(w[j])):
                return it, 1
        for j in range(3):
            if abs(r[j] - c0[j]) > box[j]:
                return it, 2
        if (phase + it + 1) % stride == 0:
            out[out_pos, 0] = r[0]
            out[out_pos, 1] = r[1]
            out[out_pos, 2] = r[2]
            out[out_pos, 3] = _fold(n[0] * e2[0] + n[1] * e2[1] + n[2] * e2[2],
                                    n[0] * e1[0] + n[1] * e1[1] + n[2] * e1[2])
            out[out_pos, 4] = w[2]
            out_pos += 1
    return noise.shape[0], 0


def _reference_axis(cfg, s):
    """Direction the torsion angle is measured from: the polarisation major axis."""
    if isinstance(cfg.trap, HarmonicTrap):
        J = np.asarray(cfg.trap.jones)
    elif hasattr(cfg.trap, "beam"):
        J = np.asarray(cfg.trap.beam.jones)
    else:
        return s.axis.copy()
    a, b = abs(J[0]) ** 2, abs(J[1]) ** 2
    phi = 0.5 * math.atan2(2 * (J[0] * np.conj(J[1])).real, a - b)
    return np.array([math.cos(phi), math.sin(phi), 0.0])


def _initial_state(cfg):
    if cfg.initial is not None:
        r, v, n, w = (np.array(x, dtype=float) for x in cfg.initial)
        return RotorState(r, v, n / np.linalg.norm(n), w)
    center = getattr(cfg.trap, "center", (0.0, 0.0, 0.0))
    s = RotorState.at_rest(center)
    s.axis = _reference_axis(cfg, s)
    return s


def rng_for(seed, stream=0):
    """Counter-based generator keyed by (seed, stream); one stream per trajectory."""
    key = (int(seed) & (2**64 - 1), int(stream) & (2**64 - 1))
    return np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64)))


def _record(s, e1, e2):
    n = s.axis
    return (s.r[0], s.r[1], s.r[2], _fold(float(np.dot(n, e2)), float(np.dot(n, e1))), s.omega[2])


def simulate(config: SimConfig) -> TimeSeries:
    """Integrate ``config.n_steps`` steps recording every ``stride``-th state."""
    cfg = config
    rng = rng_for(cfg.seed, cfg.stream)
    s = _initial_state(cfg)
    e1 = _reference_axis(cfg, s)
    e2 = np.cross([0.0, 0.0, 1.0], e1)
    if np.linalg.norm(e2) == 0:
        e2 = np.array([0.0, 1.0, 0.0])
    n_out = cfg.n_steps // cfg.stride
    out = np.empty((n_out, len(CHANNELS)))
    co = _coefficients(cfg)
    if not cfg.thermal:
        co[[1, 3, 5]] = 0.0

    if isinstance(cfg.trap, HarmonicTrap):
        _run_harmonic(cfg, s, co, rng, out, e1, e2)
    else:
        pos = 0
        for it in range(cfg.n_steps):
            try:
                s = step(s, cfg, rng, co)
            except (ParticleLost, NonFinite) as exc:
                raise type(exc)(str(exc), step=it) from None
            if (it + 1) % cfg.stride == 0:
                out[pos] = _record(s, e1, e2)
                pos += 1

    meta = {"seed": cfg.seed, "stream": cfg.stream, "config_hash": cfg.hash(),
            "stride": cfg.stride, "n_steps": cfg.n_steps}
    return TimeSeries(cfg.dt * cfg.stride, {name: out[:, i] for i, name in enumerate(CHANNELS)}, meta)


def _run_harmonic(cfg, s, co, rng, out, e1, e2):
    trap = cfg.trap
    J = np.asarray(trap.jones, dtype=complex)
    args = (np.asarray(trap.k, float), np.asarray(trap.center, float), float(trap.k_theta),
            np.ascontiguousarray(J.real), np.ascontiguousarray(J.imag),
            np.asarray(trap.drive, float), _gravity(cfg), np.asarray(trap.box, float),
            cfg.geom.mass, cfg.geom.inertia, cfg.dt, co)
    r, v, n, w = s.r.copy(), s.v.copy(), s.axis.copy(), s.omega.copy()
    done, pos = 0, 0
    while done < cfg.n_steps:
        nb = min(CHUNK, cfg.n_steps - done)
        noise = rng.standard_normal((nb, N_NOISE))
        it, status = _harmonic_kernel(r, v, n, w, *args, noise, done, cfg.stride, out, pos, e1, e2)
        if status:
            exc = NonFinite if status == 1 else ParticleLost
            msg = "non-finite state" if status == 1 else "particle left the simulation box"
            raise exc(f"{msg} at step {done + it}", step=done + it)
        pos += (done + nb) // cfg.stride - done // cfg.stride
        done += nb


def stationary_variance(k, mass, gamma, dt, kT=None):
    """Exact stationary position variance of the discrete BAOAB chain in a harmonic well.

    Solves the discrete Lyapunov equation of the linear one-step map; the
    continuous-time value is ``kT/k``.
    """
    kT = const.kbt() if kT is None else kT
    # work in (omega x, v) scaled by the thermal speed so the solve is well conditioned
    wh = 0.5 * dt * math.sqrt(k / mass)
    c = math.exp(-gamma * dt)
    B = np.array([[1.0, 0.0], [-wh, 1.0]])
    A = np.array([[1.0, wh], [0.0, 1.0]])
    O = np.diag([1.0, c])
    M = B @ A @ O @ A @ B
    noise = B @ A @ np.array([[0.0], [math.sqrt(1 - c * c)]])
    cov = linalg.solve_discrete_lyapunov(M, noise @ noise.T) * (kT / k)
    return float(cov[0, 0])


# --- driven rotation ----------------------------------------------------


def steady_state_rotation(M_o, I, gamma):
    """Terminal angular velocity ``M_o / (I gamma)`` in rad/s."""
    if I <= 0 or gamma <= 0 or M_o < 0:
        raise ValueError("require M_o >= 0 and I, gamma > 0")
    return M_o / (I * gamma)


def ring_up(M_o, I, gamma, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    return steady_state_rotation(M_o, I, gamma) * -np.expm1(-gamma * t)


def ring_down(omega0, gamma, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    return omega0 * np.exp(-gamma * t)


def thermal_spin(M_o, I, gamma, t, T=300.0, omega0=0.0, rng=None, seed=0):
    """Exact OU realisation of the spin rate under drive, damping and thermal torque.

    ``t`` must be a uniform grid starting at 0.
    """
    t = np.asarray(t, dtype=float)
    dt = t[1] - t[0]
    rng = rng_for(seed) if rng is None else rng
    c = math.exp(-gamma * dt)
    s = math.sqrt(const.kbt(T) / I * (1 - c * c))
    ss = M_o / (I * gamma)
    xi = rng.standard_normal(len(t) - 1)
    out = np.empty(len(t))
    out[0] = omega0
    for i in range(1, len(t)):
        out[i] = ss + (out[i - 1] - ss) * c + s * xi[i - 1]
    return out


def fit_ring_up(t, omega):
    """Least-squares (Omega_ss, gamma) from a ring-up record; returns (Omega_ss, gamma, tau)."""
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    g0 = 1.0 / max(t[np.argmax(omega > 0.632 * omega[-1])], t[1])
    (wss, g), _ = optimize.curve_fit(
        lambda tt, a, b: a * -np.expm1(-b * tt), t, omega, p0=(omega[-1], g0)
    )
    return float(wss), float(g), float(1 / g)


def fit_ring_down(t, omega):
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    (w0, g), _ = optimize.curve_fit(
        lambda tt, a, b: a * np.exp(-b * tt), t, omega, p0=(omega[0], 1.0 / (t[-1] / 3))
    )
    return float(w0), float(g), float(1 / g)


def tip_speed(geom, omega_rot):
    """Linear speed of the dumbbell tip, ``Omega * L/2``."""
    if np.any(np.asarray(omega_rot) < 0):
        raise ValueError("omega_rot must be non-negative")
    return omega_rot * geom.half_length
