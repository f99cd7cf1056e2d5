import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levisim import constants as const
from levisim.errors import InvalidBeam, NoSurface
from levisim.optics import (
    BeamParams,
    SurfaceSpec,
    antinode_height,
    focused_field,
    fresnel_reflection,
    jones_from_waveplate,
    total_field,
)
from levisim.trap import (
    DumbbellGeom,
    dumbbell_polarizability,
    find_wells,
    free_space_well,
    potential,
    sphere_polarizability,
    stiffness,
    trap_frequencies,
    well_near_focus,
)


def test_fresnel_sapphire():
    r = fresnel_reflection(SurfaceSpec.sapphire())
    assert r == pytest.approx((1 - 1.746) / (1 + 1.746), rel=1e-14)
    assert r.imag == 0


def test_fresnel_gold_is_lossy_and_strong():
    r = fresnel_reflection(SurfaceSpec.gold())
    assert 0.95 < abs(r) < 1.0


def test_no_surface_has_no_reflection():
    with pytest.raises(NoSurface):
        fresnel_reflection(SurfaceSpec.none())
    assert SurfaceSpec.none().zeroth_order(1550e-9) == 0


def test_active_medium_rejected():
    with pytest.raises(ValueError):
        SurfaceSpec(index=1.5 - 0.1j)


def test_waist_below_paraxial_bound():
    with pytest.raises(InvalidBeam):
        BeamParams(waist=400e-9)


@pytest.mark.parametrize("N", [1, 2, 3, 7])
def test_antinode_height_real_negative_r(N):
    assert antinode_height(-0.3 + 0j, 1550e-9, N) == pytest.approx((2 * N - 1) * 387.5e-9, rel=1e-12)


def test_antinode_height_positive_r_sits_at_half_waves():
    assert antinode_height(0.3 + 0j, 1550e-9, 1) == pytest.approx(775e-9, rel=1e-12)


def test_beam_power_integrates_to_input():
    # transverse integral of the focal-plane intensity, independent of the analytic normalisation
    b = BeamParams(waist=1.5e-6, power=0.2)
    x = np.linspace(-6e-6, 6e-6, 601)
    X, Y = np.meshgrid(x, x)
    pts = np.stack([X, Y, np.zeros_like(X)], -1)
    intensity = focused_field(b, pts).intensity
    P = np.trapezoid(np.trapezoid(intensity, x, axis=1), x)
    assert P == pytest.approx(0.2, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.6e-6, 5e-6))
def test_peak_intensity_at_focus(power, waist):
    b = BeamParams(power=power, waist=waist)
    assert focused_field(b, [0.0, 0.0, 0.0]).intensity == pytest.approx(b.peak_intensity, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=10, min_magnitude=0.1), st.complex_numbers(max_magnitude=10))
def test_jones_vector_normalised(a, b):
    beam = BeamParams(jones=(a, b))
    assert np.sum(np.abs(beam.jones) ** 2) == pytest.approx(1.0, rel=1e-12)


def test_waveplate_circular():
    j = jones_from_waveplate(np.pi / 4)
    assert abs(j[0]) == pytest.approx(abs(j[1]), rel=1e-12)
    assert BeamParams.from_waveplate(np.pi / 4).is_circular
    assert not BeamParams().is_circular


def test_point_behind_surface_rejected():
    with pytest.raises(ValueError):
        total_field(BeamParams(), SurfaceSpec.sapphire(z_s=0.0), [0.0, 0.0, 1e-7])


def test_standing_wave_visibility():
    # on-axis |E|^2 oscillates between (1 - |r|)^2 and (1 + |r|)^2 for a plane-like beam
    b = BeamParams(waist=20e-6)
    s = SurfaceSpec.sapphire()
    r = abs(fresnel_reflection(s))
    z = np.linspace(-1.6e-6, -1e-9, 4001)
    pts = np.stack([0 * z, 0 * z, z], -1)
    e2 = total_field(b, s, pts).e2
    e0 = focused_field(b, [0.0, 0.0, 0.0]).e2
    assert e2.max() / e0 == pytest.approx((1 + r) ** 2, rel=1e-3)
    assert e2.min() / e0 == pytest.approx((1 - r) ** 2, rel=1e-3)


def test_sphere_polarizability_closed_form():
    a, eps = 72e-9, 2.1
    alpha = sphere_polarizability(a, eps)
    assert alpha == pytest.approx(4 * np.pi * const.eps0 * a**3 * 1.1 / 4.1, rel=1e-14)


def test_dumbbell_polarizability_coupled_dipoles(geom):
    t = dumbbell_polarizability(geom)
    a0 = t.sphere
    D3 = 4 * np.pi * const.eps0 * geom.sphere_diameter**3
    assert t.parallel == pytest.approx(2 * a0 / (1 - 2 * a0 / D3), rel=1e-14)
    assert t.perpendicular == pytest.approx(2 * a0 / (1 + a0 / D3), rel=1e-14)
    assert t.parallel.real > 2 * a0.real > t.perpendicular.real > 0


def test_single_sphere_isotropic():
    t = dumbbell_polarizability(DumbbellGeom(n_spheres=1))
    assert t.anisotropy == 0


@settings(max_examples=40, deadline=None)
@given(st.floats(1.01, 1e4))
def test_touching_sphere_coupling_bounded(eps):
    # a0 / (2 pi eps0 D^3) = (eps - 1) / (4 (eps + 2)) < 1/4, so the series never diverges
    g = DumbbellGeom(permittivity=eps)
    t = dumbbell_polarizability(g)
    assert 2 * t.sphere.real < t.parallel.real < 2 * t.sphere.real / 0.75


def test_inertia(geom):
    assert geom.inertia == pytest.approx(14 / 5 * geom.sphere_mass * geom.radius**2, rel=1e-14)
    assert geom.mass == pytest.approx(2 * 2200 * 4 / 3 * np.pi * 72e-9**3, rel=1e-14)


def test_plane_wave_wells(geom, tensor):
    b = BeamParams(waist=20e-6)
    wells = find_wells(b, SurfaceSpec.sapphire(), geom, tensor=tensor)
    d = [w.d for w in wells[:3]]
    assert np.allclose(d, [387.5e-9, 1162.5e-9, 1937.5e-9], atol=1e-9)
    assert [w.index for w in wells[:3]] == [1, 2, 3]


def test_gradient_vanishes_at_well(beam, sapphire, geom, tensor):
    w, surf = well_near_focus(beam, sapphire, geom, 1, tensor)
    n = beam.axis_direction()
    h = 1e-10
    U = lambda z: float(potential(geom, tensor, beam, surf, [0.0, 0.0, z], n))  # noqa: E731
    grad = (U(w.z + h) - U(w.z - h)) / (2 * h)
    ks, _ = stiffness(geom, tensor, beam, surf, w.position)
    # residual force is negligible against a 0.1 nm restoring force
    assert abs(grad) < 1e-3 * ks[2] * 1e-10


def test_calibrated_free_space_frequency(beam, geom, tensor):
    w = free_space_well(beam, geom, tensor)
    assert w.f_z == pytest.approx(35e3, rel=1e-6)
    assert abs(w.z) < 1e-9
    assert w.f_x > w.f_z and w.f_torsion > 0


def test_alignment_along_polarisation(beam, geom, tensor):
    ux = potential(geom, tensor, beam, SurfaceSpec.none(), [0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    uy = potential(geom, tensor, beam, SurfaceSpec.none(), [0.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    assert ux < uy < 0


def test_trap_frequencies_consistent_with_stiffness(beam, sapphire, geom, tensor):
    w, surf = well_near_focus(beam, sapphire, geom, 1, tensor)
    ks, kth = stiffness(geom, tensor, beam, surf, w.position)
    f = trap_frequencies(w, geom, tensor, beam, surf)
    assert f[2] == pytest.approx(np.sqrt(ks[2] / geom.mass) / (2 * np.pi), rel=1e-12)
    assert f[3] == pytest.approx(np.sqrt(kth / geom.inertia) / (2 * np.pi), rel=1e-12)
