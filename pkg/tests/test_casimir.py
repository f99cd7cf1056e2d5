import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levisim.casimir import (
    CasimirConfig,
    brute_force_energy,
    calibrate,
    casimir_force,
    casimir_torque,
    check_mesh,
    pairwise_energy,
    virtual_torque,
    width_sweep,
)
from levisim.errors import Interpenetration
from levisim.trap import DumbbellGeom

GEOM = DumbbellGeom()
SPHERE = DumbbellGeom(n_spheres=1)


@pytest.fixture(scope="module")
def cal():
    return calibrate(CasimirConfig(), GEOM, 3.0e-16, 370e-9)


def test_calibration_hits_force(cal):
    assert abs(casimir_force(cal, GEOM, [370e-9])[0]) == pytest.approx(3.0e-16, rel=1e-12)
    assert casimir_force(cal, GEOM, [370e-9])[0] < 0


def test_zero_coefficient_gives_zero():
    assert pairwise_energy(CasimirConfig(coefficient=0.0), GEOM) == 0.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 180.0))
def test_half_turn_periodicity(theta):
    cfg = CasimirConfig()
    a, b = pairwise_energy(cfg, GEOM, theta), pairwise_energy(cfg, GEOM, theta + 180.0)
    assert b == pytest.approx(a, rel=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.floats(1.0, 89.0))
def test_torque_odd_about_stripe_axis(theta):
    cfg = CasimirConfig()
    assert virtual_torque(cfg, GEOM, -theta) == pytest.approx(-virtual_torque(cfg, GEOM, theta), rel=1e-6)


def test_symmetry_axes_have_no_torque(cal):
    tmax = abs(virtual_torque(cal, GEOM, 45.0))
    for th in (0.0, 90.0):
        assert abs(virtual_torque(cal, GEOM, th)) < 1e-6 * tmax


def test_grid_and_virtual_torque_agree(cal):
    th, T = casimir_torque(cal, GEOM)
    i = int(np.where(th == 135.0)[0][0])
    assert T[i] == pytest.approx(virtual_torque(cal, GEOM, 135.0), rel=0.01)
    with pytest.raises(ValueError):
        casimir_torque(cal, GEOM, np.arange(0.0, 360.0, 10.0))


def test_sphere_feels_no_torque(cal):
    _, T = casimir_torque(cal, GEOM)
    _, Ts = casimir_torque(cal, SPHERE)
    assert np.max(np.abs(Ts)) < 1e-8 * np.max(np.abs(T))


def test_monotonic_decay(cal):
    d = np.arange(300e-9, 601e-9, 50e-9)
    F = np.abs(casimir_force(cal, GEOM, d))
    T = np.abs([virtual_torque(cal.with_(separation=x), GEOM, 135.0) for x in d])
    assert np.all(np.diff(F) < 0) and np.all(np.diff(T) < 0)


def test_brute_force_oracle():
    # independent voxel sum with finite stripes, at the operating point and twice the separation
    cfg = CasimirConfig()
    for d in (370e-9, 740e-9):
        quad = pairwise_energy(cfg, GEOM, 135.0, separation=d)
        brute = brute_force_energy(cfg, GEOM, 135.0, separation=d)
        assert brute == pytest.approx(quad, rel=0.01)


def test_width_limits_and_interior_maximum(cal):
    ws, T, arg = width_sweep(cal, GEOM, np.linspace(30e-9, 570e-9, 10))
    assert ws[0] < arg < ws[-1]
    tiny = virtual_torque(cal.with_(stripe_width=1e-9), GEOM, 135.0)
    assert abs(tiny) < 0.05 * np.max(np.abs(T))


def test_interpenetration():
    with pytest.raises(Interpenetration):
        pairwise_energy(CasimirConfig(separation=60e-9), GEOM)


def test_mesh_gate():
    out = check_mesh(CasimirConfig(), GEOM)
    assert out["energy_change"] < 0.02 and out["torque_change"] < 0.02 and out["period_change"] < 0.02
