import numpy as np
import pytest

from levisim.damping import Environment
from levisim.grating import GratingSpec
from levisim.rotation import (
    calibrate_efficiency,
    circular_beam,
    loglog_slope,
    make_surface,
    rotation_curve,
    rotation_frequency,
    trap_intensity,
)


def test_circular_beam(beam):
    c = circular_beam(beam)
    assert c.is_circular and c.waist == beam.waist


def test_inverse_pressure(geom):
    P = np.logspace(-5, -2, 7)
    curve = rotation_curve(geom, 1e12, 1e-3, P, "x", Environment(1.0))
    assert curve.slope == pytest.approx(-1.0, abs=1e-12)
    assert curve.at(1e-4) * 1e-4 == pytest.approx(curve.at(1e-3) * 1e-3, rel=1e-12)


def test_calibration_exact(geom):
    env = Environment(5.9e-5)
    eta = calibrate_efficiency(geom, env, 1e12, 1.6e9)
    assert rotation_frequency(geom, env, 1e12, eta) == pytest.approx(1.6e9, rel=1e-12)


def test_surfaces_enhance_intensity(beam, geom):
    free = trap_intensity(beam, make_surface("free"), geom)
    sapphire = trap_intensity(beam, make_surface("sapphire"), geom)
    assert sapphire > free > 0
    with pytest.raises(ValueError):
        make_surface("glass")


def test_grating_intensity_positive(beam, geom):
    assert trap_intensity(beam, make_surface("grating", GratingSpec()), geom) > 0


def test_loglog_slope():
    x = np.logspace(0, 3, 10)
    assert loglog_slope(x, 3 * x**-2.5) == pytest.approx(-2.5, rel=1e-12)
