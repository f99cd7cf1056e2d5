import math

import numpy as np
import pytest

from levisim import constants as const
from levisim.damping import DampingRates, Environment
from levisim.errors import NonFinite, ParticleLost
from levisim.io import read_csv
from levisim.langevin import (
    HarmonicTrap,
    RotorState,
    SimConfig,
    _coefficients,
    fit_ring_down,
    fit_ring_up,
    ring_down,
    ring_up,
    rng_for,
    simulate,
    stationary_variance,
    steady_state_rotation,
    step,
    thermal_spin,
    tip_speed,
)
from levisim.trap import DumbbellGeom

GEOM = DumbbellGeom()
M, I = GEOM.mass, GEOM.inertia
KT = const.kbt(300.0)


def k_for(f):
    return M * (2 * np.pi * f) ** 2


def trap(fs=(1e5, 1.2e5, 2e5), **kw):
    kw.setdefault("box", (1e-3, 1e-3, 1e-3))
    return HarmonicTrap(k=tuple(k_for(f) for f in fs), **kw)


def test_energy_conserved_without_bath():
    f = 1e5
    dt = 1 / (5000 * f)  # velocity-Verlet energy ripple is (omega dt)^2 / 4
    cfg = SimConfig(dt=dt, n_steps=10000, trap=trap((f, f, f)), geom=GEOM, thermal=False,
                    rates=DampingRates(0.0, 0.0, 0.0))
    s = RotorState.at_rest()
    s.r[:] = (10e-9, -5e-9, 3e-9)
    k = np.asarray(cfg.trap.k)
    co = _coefficients(cfg)
    rng = rng_for(0)

    def energy(st):
        return 0.5 * M * st.v @ st.v + 0.5 * np.sum(k * st.r**2)

    e0 = energy(s)
    dev = 0.0
    for _ in range(cfg.n_steps):
        s = step(s, cfg, rng, co)
        dev = max(dev, abs(energy(s) / e0 - 1))
    assert dev < 1e-6


def test_velocity_decay():
    g = 2e4
    v0 = 1e-3
    dt = 1e-7
    n = 5000
    cfg = SimConfig(dt=dt, n_steps=n, trap=trap((0.0, 0.0, 0.0)), geom=GEOM, thermal=False,
                    rates=DampingRates(g, g, g),
                    initial=((0.0, 0.0, 0.0), (v0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 0.0)))
    ts = simulate(cfg)
    t = ts.t + dt
    expect = v0 / g * -np.expm1(-g * t)
    assert np.max(np.abs(ts["x"] / expect - 1)) < 0.01


def test_deterministic_and_streams_independent():
    cfg = SimConfig(dt=1e-7, n_steps=20000, trap=trap(), geom=GEOM, env=Environment(1.5), seed=11, stride=5)
    a, b = simulate(cfg), simulate(cfg)
    for name in a.channels:
        assert np.array_equal(a[name], b[name])
    c = simulate(cfg.with_(stream=1))
    assert not np.array_equal(a["x"], c["x"])
    assert a.metadata["config_hash"] == b.metadata["config_hash"] != c.metadata["config_hash"]


def test_python_step_matches_compiled_kernel():
    cfg = SimConfig(dt=1e-7, n_steps=300, trap=trap(k_theta=10 * KT), geom=GEOM, env=Environment(1.5), seed=3)
    ts = simulate(cfg)
    rng = rng_for(3)
    s = RotorState.at_rest()
    co = _coefficients(cfg)
    for _ in range(cfg.n_steps):
        s = step(s, cfg, rng, co)
    assert s.r == pytest.approx([ts["x"][-1], ts["y"][-1], ts["z"][-1]], rel=1e-9, abs=1e-20)


def test_discrete_variance_converges_with_dt():
    k = k_for(1e5)
    g = 1e4
    dt = 1 / (50 * 1e5)
    v1 = stationary_variance(k, M, g, dt)
    v2 = stationary_variance(k, M, g, dt / 2)
    assert abs(v2 / v1 - 1) < 0.01
    assert v2 == pytest.approx(KT / k, rel=0.01)


def test_time_step_bound_enforced():
    with pytest.raises(ValueError):
        SimConfig(dt=1e-6, n_steps=10, trap=trap((1e5, 1e5, 1e5)), geom=GEOM)


def test_steady_rotation_matches_terminal_speed():
    g = 2e4
    drive = 1e-22
    cfg = SimConfig(dt=1e-7, n_steps=40000, trap=trap(drive=(0.0, 0.0, drive)), geom=GEOM, thermal=False,
                    rates=DampingRates(g, g, g))
    ts = simulate(cfg)
    assert ts["omega_rot"][-1] == pytest.approx(drive / (I * g), rel=0.01)


def test_ring_up_analytic():
    M_o, g = 1e-24, 0.4
    tau = 1 / g
    wss = steady_state_rotation(M_o, I, g)
    assert ring_up(M_o, I, g, tau) == pytest.approx(wss * (1 - math.exp(-1)), rel=1e-12)
    assert ring_up(M_o, I, g, 0.0) == 0.0
    assert ring_up(M_o, I, g, 60 * tau) == pytest.approx(wss, rel=1e-12)
    assert ring_down(wss, g, tau) == pytest.approx(wss / math.e, rel=1e-12)
    with pytest.raises(ValueError):
        ring_up(M_o, I, g, -1.0)
    with pytest.raises(ValueError):
        steady_state_rotation(M_o, I, 0.0)


def test_fit_noisy_ring_up_and_down():
    g = 0.367
    M_o = 1e-23
    t = np.linspace(0, 8 / g, 4001)
    spin = thermal_spin(M_o, I, g, t, seed=5)
    wss, gf, tau = fit_ring_up(t, spin)
    assert tau == pytest.approx(1 / g, rel=0.03)
    assert wss == pytest.approx(M_o / (I * g), rel=0.03)
    down = thermal_spin(0.0, I, g, t, omega0=wss, seed=6)
    _, gd, _ = fit_ring_down(t, down)
    assert gd == pytest.approx(g, rel=0.03)


def test_thermal_spin_equipartition():
    g = 1.0
    t = np.arange(200001) * 0.1
    spin = thermal_spin(0.0, I, g, t, seed=1)
    assert np.var(spin) == pytest.approx(KT / I, rel=0.05)


def test_tip_speed():
    assert tip_speed(GEOM, 2 * np.pi * 1.6e9) == pytest.approx(1447.6, rel=1e-4)
    with pytest.raises(ValueError):
        tip_speed(GEOM, -1.0)


def test_particle_lost():
    cfg = SimConfig(dt=1e-7, n_steps=10000, trap=trap((0.0, 0.0, 0.0), box=(1e-9, 1e-9, 1e-9)),
                    geom=GEOM, env=Environment(1.5))
    with pytest.raises(ParticleLost) as exc:
        simulate(cfg)
    assert exc.value.step is not None


def test_non_finite():
    cfg = SimConfig(dt=1e-7, n_steps=10, trap=trap(), geom=GEOM,
                    initial=((np.nan, 0, 0), (0, 0, 0), (1, 0, 0), (0, 0, 0)))
    with pytest.raises(NonFinite):
        simulate(cfg)


def test_torsion_angle_folded():
    cfg = SimConfig(dt=1e-7, n_steps=20000, trap=trap(), geom=GEOM, env=Environment(1.5), stride=10)
    th = simulate(cfg)["theta_torsion"]
    assert np.all(th > -np.pi / 2) and np.all(th <= np.pi / 2)


def test_csv_export(tmp_path):
    cfg = SimConfig(dt=1e-7, n_steps=1000, trap=trap(), geom=GEOM, stride=10)
    ts = simulate(cfg)
    ts.to_csv(tmp_path / "t.csv")
    header, cols = read_csv(tmp_path / "t.csv")
    assert any(h.startswith("config_hash") for h in header)
    assert np.allclose(cols["x"], ts["x"], rtol=1e-9, atol=0)
    assert len(cols["t_s"]) == 100
