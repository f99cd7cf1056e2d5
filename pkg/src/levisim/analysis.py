"""Spectral estimation, resonance fitting and sensitivity figures of merit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from . import constants as const
from .errors import NoConvergence, NoPeak, TooShort

PEAK_PROMINENCE = 10.0


@dataclass
class PsdEstimate:
    """Single-sided power spectral density."""

    freq: np.ndarray
    psd: np.ndarray
    n_segments: int
    window: str = "hann"
    overlap: float = 0.5
    unit: str = ""

    def integral(self, lo=None, hi=None):
        m = np.ones_like(self.freq, dtype=bool)
        if lo is not None:
            m &= self.freq >= lo
        if hi is not None:
            m &= self.freq <= hi
        df = self.freq[1] - self.freq[0]
        return float(np.sum(self.psd[m]) * df)

    def band(self, lo, hi):
        m = (self.freq >= lo) & (self.freq <= hi)
        return PsdEstimate(self.freq[m], self.psd[m], self.n_segments, self.window, self.overlap, self.unit)

    def rows(self):
        return {"f_Hz": self.freq, "psd": self.psd}


def welch_psd(data, fs=None, channel=None, nperseg=4096, overlap=0.5, window="hann") -> PsdEstimate:
    """Welch estimate normalised so that its integral equals the variance.

    ``data`` is a :class:`~levisim.langevin.TimeSeries` (with ``channel``)
    or a plain array sampled at ``fs``.
    """
    if channel is not None:
        fs = 1.0 / data.dt
        x = np.asarray(data[channel], dtype=float)
    else:
        x = np.asarray(data, dtype=float)
    if fs is None or fs <= 0:
        raise ValueError("sampling rate required")
    if nperseg & (nperseg - 1) or nperseg < 8:
        raise ValueError("segment length must be a power of two >= 8")
    if nperseg > len(x):
        raise TooShort(f"segment length {nperseg} exceeds series length {len(x)}")
    nover = int(nperseg * overlap)
    f, p = signal.welch(x, fs=fs, window=window, nperseg=nperseg, noverlap=nover,
                        detrend="constant", scaling="density", return_onesided=True)
    nseg = (len(x) - nover) // (nperseg - nover)
    return PsdEstimate(f, p, nseg, window, overlap, channel or "")


# --- Lorentzian ------------------------------------------------------------


def lorentzian(f, f0, gamma, area):
    """Damped-oscillator PSD whose integral over f >= 0 equals ``area``.

    ``S(f) = (2/pi) area g f0^2 / ((f^2 - f0^2)^2 + g^2 f^2)`` with
    ``g = gamma / (2 pi)``; for thermal motion ``area = kT/k`` and
    ``gamma`` is the energy damping rate in 1/s.
    """
    f = np.asarray(f, dtype=float)
    g = gamma / (2 * np.pi)
    return (2 / np.pi) * area * g * f0**2 / ((f * f - f0 * f0) ** 2 + g * g * f * f)


def thermal_psd(f, f0, gamma, mass, T=300.0):
    k = mass * (2 * np.pi * f0) ** 2
    return lorentzian(f, f0, gamma, const.kbt(T) / k)


@dataclass
class LorentzianFit:
    f0: float
    gamma: float
    area: float
    covariance: np.ndarray
    residual_rms: float
    nfev: int
    model: str = "S(f) = (2/pi) A g f0^2 / ((f^2 - f0^2)^2 + g^2 f^2), g = gamma/(2 pi)"

    @property
    def stderr(self):
        return np.sqrt(np.diag(self.covariance))


def fit_band(f0, fs):
    """Default fit window ``(0.2 f0, min(3 f0, fs/4))``.

    The sampled spectrum folds the ``f^-4`` tail back below Nyquist, so
    the window stops at a quarter of the sampling rate where aliasing is
    still negligible against the single-oscillator model.
    """
    return 0.2 * f0, min(3.0 * f0, 0.25 * fs)


def lorentzian_fit(psd: PsdEstimate, band=None, p0=None, max_residual=None) -> LorentzianFit:
    """Least-squares fit of :func:`lorentzian` on log-PSD residuals.

    Raises :class:`NoConvergence` if the optimiser fails within 200
    iterations or the residual exceeds the statistical scatter expected
    for the segment count (a sign of more than one resonance in the band).
    """
    est = psd.band(*band) if band is not None else psd
    f, p = est.freq, est.psd
    keep = (f > 0) & (p > 0)
    f, p = f[keep], p[keep]
    if len(f) < 4:
        raise NoConvergence("fewer than four usable bins in band", residual=np.inf, nfev=0)
    if p0 is None:
        i = int(np.argmax(p))
        f0 = f[i]
        half = f[p >= p[i] / 2]
        gamma = max(2 * np.pi * (half.max() - half.min()), 2 * np.pi * (f[1] - f[0]))
        area = float(np.sum(p) * (f[1] - f[0]))
        p0 = (f0, gamma, area)
    logp = np.log(p)

    def resid(q):
        return np.log(lorentzian(f, *np.exp(q))) - logp

    res = optimize.least_squares(resid, np.log(p0), method="lm", max_nfev=200 * (len(p0) + 1),
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15)
    rms = float(np.sqrt(np.mean(res.fun**2)))
    if max_residual is None:
        max_residual = 0.1 + 3.0 / math.sqrt(max(est.n_segments, 1))
    if res.status <= 0 or rms > max_residual:
        raise NoConvergence(
            f"Lorentzian fit failed (status {res.status}, log-residual rms {rms:.3g})",
            residual=rms, nfev=res.nfev,
        )
    q = res.x
    J = res.jac / np.exp(q)[None, :]
    dof = max(len(f) - 3, 1)
    try:
        cov = np.linalg.inv(J.T @ J) * (2 * res.cost / dof)
    except np.linalg.LinAlgError:
        cov = np.full((3, 3), np.nan)
    f0, gamma, area = np.exp(q)
    return LorentzianFit(float(f0), float(gamma), float(area), cov, rms, int(res.nfev))


# --- rotation ----------------------------------------------------------------


def rotation_signal(f_rot, fs, n, noise=0.1, phase=0.0, seed=0):
    """Detector signal of a spinning dumbbell: a tone at twice the rotation frequency."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    return np.cos(2 * (2 * np.pi * f_rot * t + phase)) + noise * rng.standard_normal(n)


def detect_rotation_peak(psd: PsdEstimate, min_prominence=PEAK_PROMINENCE) -> float:
    """Mechanical rotation frequency: half the frequency of the dominant narrow peak.

    The peak must stand ``min_prominence`` times above the median level.
    """
    p = psd.psd
    i = int(np.argmax(p[1:])) + 1
    floor = float(np.median(p[1:]))
    if floor <= 0 or p[i] < min_prominence * floor:
        raise NoPeak(f"no peak {min_prominence:g}x above the spectral floor")
    fpk = psd.freq[i]
    if 0 < i < len(p) - 1:
        a, b, c = np.log(p[i - 1]), np.log(p[i]), np.log(p[i + 1])
        denom = a - 2 * b + c
        if denom < 0:
            fpk += 0.5 * (a - c) / denom * (psd.freq[1] - psd.freq[0])
    return float(fpk / 2)


# --- sensitivities -----------------------------------------------------------


def thermal_torque_sensitivity(I, gamma, T=300.0):
    """Thermal limit ``sqrt(4 kT I gamma)`` in N m / sqrt(Hz)."""
    if I <= 0 or gamma <= 0:
        raise ValueError("I and gamma must be positive")
    return math.sqrt(4 * const.kbt(T) * I * gamma)


def thermal_spin_noise(omega, I, gamma, T=300.0):
    """Single-sided PSD of thermal spin-rate fluctuations, (rad/s)^2/Hz."""
    omega = np.asarray(omega, dtype=float)
    return 4 * const.kbt(T) * gamma / (I * (gamma**2 + omega**2))


def torque_sensitivity(I, gamma, omega, s_noise=None, T=300.0):
    """``I sqrt(gamma^2 + Omega^2) S_noise^{1/2}(Omega)``.

    ``s_noise`` is the amplitude spectral density of the measured spin
    rate at angular frequencies ``omega``.  Without it the thermal spin
    noise is substituted, which gives ``sqrt(4 kT I gamma)`` at every
    frequency.
    """
    if I <= 0 or gamma <= 0:
        raise ValueError("I and gamma must be positive")
    omega = np.asarray(omega, dtype=float)
    if s_noise is None:
        s_noise = np.sqrt(thermal_spin_noise(omega, I, gamma, T))
    return I * np.sqrt(gamma**2 + omega**2) * np.asarray(s_noise)


def frequency_resolved_torque(spin_rate, fs, I, gamma, nperseg=1024, band=None):
    """Torque sensitivity curve from a recorded spin-rate series.

    Returns ``(f, S_T^{1/2}(f), band average)``.
    """
    est = welch_psd(spin_rate, fs=fs, nperseg=nperseg)
    f, s = est.freq[1:], est.psd[1:]
    curve = torque_sensitivity(I, gamma, 2 * np.pi * f, np.sqrt(s))
    if band is not None:
        m = (f >= band[0]) & (f <= band[1])
    else:
        m = np.ones_like(f, dtype=bool)
    return f, curve, float(np.mean(curve[m]))


def force_sensitivity(mass, rates, T=300.0):
    """``sqrt(4 kT m Gamma_i)`` per axis in N / sqrt(Hz)."""
    rates = np.asarray(rates, dtype=float)
    if mass <= 0 or np.any(rates < 0):
        raise ValueError("mass must be positive and rates non-negative")
    return np.sqrt(4 * const.kbt(T) * mass * rates)


@dataclass
class SensitivityReport:
    pressure_torr: float
    torque: float
    torque_curve: tuple
    force: tuple
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.torque, *self.force, *np.asarray(self.torque_curve[1]).ravel()]
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise ValueError("sensitivities must be positive and finite")

    def as_dict(self):
        return {
            "pressure_torr": self.pressure_torr,
            "S_T_sqrt_Nm_per_rtHz": self.torque,
            "S_F_sqrt_N_per_rtHz": {"x": self.force[0], "y": self.force[1], "z": self.force[2]},
            "inputs": self.inputs,
        }


def sensitivity_report(env, geom, axis=(1.0, 0.0, 0.0), f_grid=None) -> SensitivityReport:
    from .damping import damping_rates

    rates = damping_rates(env, geom)
    T = env.temperature
    f_grid = np.logspace(-2, 2, 41) if f_grid is None else np.asarray(f_grid)
    curve = torque_sensitivity(geom.inertia, rates.rotational, 2 * np.pi * f_grid, T=T)
    G = rates.com_rates(axis)
    SF = force_sensitivity(geom.mass, G, T)
    return SensitivityReport(
        env.pressure_torr,
        thermal_torque_sensitivity(geom.inertia, rates.rotational, T),
        (f_grid, curve),
        tuple(float(x) for x in SF),
        {"I": geom.inertia, "gamma": rates.rotational, "m": geom.mass, "T": T,
         "Gamma_x": float(G[0]), "Gamma_y": float(G[1]), "Gamma_z": float(G[2])},
    )


def sensitivity_vs_distance(env, geom, distances, axis=(1.0, 0.0, 0.0)):
    """Force sensitivity per axis at each particle-surface separation.

    Rows carry ``d = inf`` for free space.
    """
    from .damping import damping_rates, proximity_correction

    rates = damping_rates(env, geom).com_rates(axis)
    rows = []
    for d in distances:
        corr = 1.0 if not np.isfinite(d) else proximity_correction(env, d, geom.sphere_diameter)
        SF = force_sensitivity(geom.mass, rates * corr, env.temperature)
        rows.append({"d_nm": d * 1e9, "S_F_x": SF[0], "S_F_y": SF[1], "S_F_z": SF[2]})
    return rows
