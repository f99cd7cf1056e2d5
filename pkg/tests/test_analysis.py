import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levisim import constants as const
from levisim.analysis import (
    PsdEstimate,
    detect_rotation_peak,
    fit_band,
    force_sensitivity,
    frequency_resolved_torque,
    lorentzian,
    lorentzian_fit,
    rotation_signal,
    sensitivity_report,
    sensitivity_vs_distance,
    thermal_psd,
    thermal_torque_sensitivity,
    torque_sensitivity,
    welch_psd,
)
from levisim.damping import Environment, damping_rates
from levisim.errors import NoConvergence, NoPeak, TooShort
from levisim.langevin import thermal_spin


def test_tone_power():
    fs, n = 1e6, 1 << 18
    t = np.arange(n) / fs
    a = 0.7
    est = welch_psd(a * np.sin(2 * np.pi * 12345.0 * t), fs=fs, nperseg=4096)
    assert est.integral() == pytest.approx(a * a / 2, rel=1e-3)
    assert est.freq[np.argmax(est.psd)] == pytest.approx(12345.0, abs=fs / 4096)


def test_white_noise_parseval():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1 << 20)
    est = welch_psd(x, fs=1.0, nperseg=1024)
    assert est.integral() == pytest.approx(np.var(x), rel=0.01)
    assert est.n_segments > 1000


def test_welch_input_validation():
    with pytest.raises(TooShort):
        welch_psd(np.zeros(100), fs=1.0, nperseg=256)
    with pytest.raises(ValueError):
        welch_psd(np.zeros(1000), fs=1.0, nperseg=300)
    with pytest.raises(ValueError):
        welch_psd(np.zeros(1000), nperseg=256)


def test_lorentzian_normalised():
    f = np.linspace(0, 5e6, 2_000_001)
    S = lorentzian(f, 2e5, 1e4, 3.0)
    assert np.trapezoid(S, f) == pytest.approx(3.0, rel=1e-3)


def test_thermal_psd_area_is_equipartition():
    m, f0 = 7e-18, 1e5
    k = m * (2 * np.pi * f0) ** 2
    f = np.linspace(0, 1e7, 4_000_001)
    assert np.trapezoid(thermal_psd(f, f0, 1e3, m), f) == pytest.approx(const.kbt() / k, rel=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e4, 1e6), st.floats(0.01, 0.5), st.floats(1e-20, 1e-14))
def test_self_fit(f0, q, area):
    gamma = 2 * np.pi * f0 * q
    f = np.linspace(0, 4 * f0, 2049)
    est = PsdEstimate(f, lorentzian(f, f0, gamma, area), 100, "hann", 0.5, "z")
    fit = lorentzian_fit(est, band=(0.2 * f0, 3 * f0))
    assert fit.f0 == pytest.approx(f0, rel=1e-8)
    assert fit.gamma == pytest.approx(gamma, rel=1e-8)
    assert fit.area == pytest.approx(area, rel=1e-8)


def test_two_peaks_rejected():
    f = np.linspace(0, 4e5, 2049)
    p = lorentzian(f, 1e5, 3e3, 1.0) + lorentzian(f, 2.5e5, 3e3, 1.0)
    est = PsdEstimate(f, p, 100, "hann", 0.5, "z")
    with pytest.raises(NoConvergence) as exc:
        lorentzian_fit(est, band=(2e4, 3.8e5))
    assert exc.value.residual is not None


def test_fit_reports_uncertainty():
    rng = np.random.default_rng(2)
    f = np.linspace(0, 4e5, 2049)[1:]
    p = lorentzian(f, 1e5, 6e3, 1.0) * rng.gamma(50, 1 / 50, len(f))
    fit = lorentzian_fit(PsdEstimate(f, p, 50, "hann", 0.5, "z"), band=(2e4, 3e5))
    assert fit.f0 == pytest.approx(1e5, rel=0.01)
    assert np.all(fit.stderr > 0) and fit.stderr[0] < 0.01 * fit.f0


@pytest.mark.parametrize("f_rot", [1.6e9, 175e6])
def test_rotation_peak_recovered(f_rot):
    fs = 8 * f_rot
    x = rotation_signal(f_rot, fs, 1 << 16, noise=0.3, seed=1)
    est = welch_psd(x, fs=fs, nperseg=4096)
    assert detect_rotation_peak(est) == pytest.approx(f_rot, rel=1e-3)


def test_flat_spectrum_has_no_peak():
    est = welch_psd(np.random.default_rng(3).standard_normal(1 << 16), fs=1e6, nperseg=1024)
    with pytest.raises(NoPeak):
        detect_rotation_peak(est)


def test_torque_sensitivity_closed_form():
    I, g = 5e-32, 0.4
    assert thermal_torque_sensitivity(I, g) == pytest.approx(math.sqrt(4 * const.kbt() * I * g), rel=1e-14)
    # thermal spin noise gives the white thermal limit at every frequency
    w = np.logspace(-3, 3, 13)
    assert np.allclose(torque_sensitivity(I, g, w), thermal_torque_sensitivity(I, g), rtol=1e-12)
    with pytest.raises(ValueError):
        thermal_torque_sensitivity(I, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-6, 1e-2))
def test_torque_sensitivity_root_pressure(p, ):
    from levisim.damping import rotational_damping
    from levisim.trap import DumbbellGeom

    geom = DumbbellGeom()
    s1 = thermal_torque_sensitivity(geom.inertia, rotational_damping(Environment(p), geom)[0])
    s4 = thermal_torque_sensitivity(geom.inertia, rotational_damping(Environment(4 * p), geom)[0])
    assert s4 / s1 == pytest.approx(2.0, rel=1e-6)


def test_frequency_resolved_torque_from_spin_record(geom):
    g = 0.367
    dt = 0.05 / g
    t = np.arange(1 << 16) * dt
    spin = thermal_spin(0.0, geom.inertia, g, t, seed=4)
    _, curve, avg = frequency_resolved_torque(spin, 1 / dt, geom.inertia, g, nperseg=1024,
                                              band=(0.1 * g / (2 * np.pi), 2 * g / np.pi))
    assert avg == pytest.approx(thermal_torque_sensitivity(geom.inertia, g), rel=0.1)


def test_force_sensitivity(geom):
    rates = [1e3, 2e3, 4e3]
    sf = force_sensitivity(geom.mass, rates)
    assert sf[1] / sf[0] == pytest.approx(math.sqrt(2), rel=1e-14)
    assert sf[0] == pytest.approx(math.sqrt(4 * const.kbt() * geom.mass * 1e3), rel=1e-14)
    with pytest.raises(ValueError):
        force_sensitivity(geom.mass, [-1.0])


def test_sensitivity_report(geom):
    env = Environment(1.5)
    rep = sensitivity_report(env, geom)
    r = damping_rates(env, geom)
    assert rep.force[0] == pytest.approx(math.sqrt(4 * const.kbt() * geom.mass * r.parallel), rel=1e-12)
    assert rep.force[1] == rep.force[2] > rep.force[0]
    d = rep.as_dict()
    assert d["S_T_sqrt_Nm_per_rtHz"] == rep.torque


def test_force_sensitivity_flat_with_distance(geom):
    rows = sensitivity_vs_distance(Environment(1.5), geom, [430e-9, 1.2e-6, 2e-6, float("inf")])
    x = [r["S_F_x"] for r in rows]
    assert max(x) / min(x) == pytest.approx(1.0, abs=1e-12)


def test_fit_band_stays_clear_of_nyquist():
    assert fit_band(35e3, 1.5e6) == (7e3, 105e3)
    lo, hi = fit_band(242e3, 1.5e6)
    assert lo == pytest.approx(48.4e3) and hi == 0.375e6
