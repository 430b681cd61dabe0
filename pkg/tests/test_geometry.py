import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.exact import solve_bowl
from mcflab.geometry import (
    GaugeError, GraphProfile, ProfileError, RadialProfile, check_dimension, convert_gauge,
    convexity_flags, curvature_of_graph, curvature_of_radial, diff_matrices, even_diff_matrices,
    fornberg_weights,
)


@pytest.fixture(scope="module")
def bowl():
    return solve_bowl(3, 1.0, 20.0, num=801)


def test_fornberg_weights_reproduce_polynomials():
    x = np.array([-1.0, 0.0, 0.5, 2.0])
    w = fornberg_weights(0.3, x, 2)
    for k in range(4):
        vals = x**k
        assert w[:, 0] @ vals == pytest.approx(0.3**k)
        assert w[:, 1] @ vals == pytest.approx(k * 0.3 ** max(k - 1, 0), abs=1e-12)
        assert w[:, 2] @ vals == pytest.approx(k * (k - 1) * 0.3 ** max(k - 2, 0), abs=1e-12)


@pytest.mark.parametrize("order", [2, 4, 6])
def test_diff_matrices_flag_boundaries(order):
    x = np.linspace(0, 1, 20)
    _, _, flags = diff_matrices(x, order)
    assert flags[: order // 2].all() and flags[-(order // 2):].all()
    assert not flags[order // 2: -(order // 2)].any()


def test_dimension_checks():
    check_dimension(3)
    check_dimension(2, allow_n2=True)
    with pytest.raises(ProfileError):
        check_dimension(2)
    with pytest.raises(ProfileError):
        RadialProfile(2, np.linspace(0, 1, 6), np.ones(6))


@pytest.mark.parametrize("z, r", [
    (np.linspace(0, 1, 6), -np.ones(6)),
    (np.linspace(0, 1, 6)[::-1], np.ones(6)),
    (np.linspace(0, 1, 3), np.ones(3)),
    (np.linspace(0, 1, 6), np.ones(5)),
])
def test_radial_profile_validation(z, r):
    with pytest.raises(ProfileError):
        RadialProfile(3, z, r)


def test_cylinder_curvature():
    p = RadialProfile(3, np.linspace(-5, 5, 41), np.full(41, 2.0))
    rep = curvature_of_radial(p)
    np.testing.assert_allclose(rep.H, 1.0, atol=1e-13)
    np.testing.assert_allclose(rep.A_norm_sq, 0.5, atol=1e-13)


@pytest.mark.parametrize("order", [2, 4])
def test_sphere_cap_curvature(order):
    z = np.linspace(-0.6, 0.6, 241)
    p = RadialProfile(3, z, np.sqrt(1 - z**2), order)
    rep = curvature_of_radial(p)
    tol = 1e-4 if order == 2 else 1e-7
    np.testing.assert_allclose(rep.H[~rep.boundary], 3.0, atol=tol)


def test_graph_curvature_paraboloid_tip():
    r = np.linspace(0, 1, 101)
    p = GraphProfile(3, r, r**2 / 6, 4)
    rep = curvature_of_graph(p)
    f_r = p.derivatives()[0]
    assert rep.H[0] * np.sqrt(1 + f_r[0] ** 2) == pytest.approx(1.0, abs=1e-10)


def test_graph_curvature_hemisphere():
    r = np.linspace(0, 0.8, 161)
    p = GraphProfile(3, r, -np.sqrt(1 - r**2), 4)
    rep = curvature_of_graph(p)
    np.testing.assert_allclose(rep.H[~rep.boundary], 3.0, atol=1e-6)


def test_graph_rejects_kinked_tip():
    r = np.linspace(0, 1, 21)
    with pytest.raises(ProfileError):
        curvature_of_graph(GraphProfile(3, r, r))


def test_bowl_tip_curvature_equals_speed(bowl):
    rep = curvature_of_graph(bowl.profile)
    assert rep.H[0] == pytest.approx(1.0, abs=1e-6)


def test_bowl_radial_curvature_matches_translator_speed(bowl):
    # a unit-speed translator has H = <e_{n+1}, nu> = r_z/sqrt(1 + r_z^2) in the radial gauge
    z = np.linspace(2.0, 60.0, 600)
    p = bowl.radial_profile(z, order=4)
    rep = curvature_of_radial(p)
    r_z = p.derivatives()[0]
    inner = ~rep.boundary
    np.testing.assert_allclose(rep.H[inner], r_z[inner] / np.sqrt(1 + r_z[inner] ** 2), atol=1e-5)


def test_line_gauge_round_trip():
    z = np.linspace(1, 5, 9)
    g = convert_gauge(RadialProfile(3, z, z))
    np.testing.assert_allclose(g.f, g.r)


def test_non_monotone_profile_rejected():
    z = np.linspace(0, 6, 50)
    with pytest.raises(GaugeError):
        convert_gauge(RadialProfile(3, z, 2 + np.sin(z)))


def test_bowl_gauge_round_trip(bowl):
    g = bowl.profile
    rad = convert_gauge(g)
    back = convert_gauge(rad, g.r[1:])
    np.testing.assert_allclose(back.f, g.f[1:], atol=1e-8)


def test_convexity_flags():
    z = np.linspace(-2, 2, 41)
    cyl = convexity_flags(RadialProfile(3, z, np.full(41, 2.0)))
    assert not cyl.r_z_positive and not cyl.r_zz_negative
    cap = convexity_flags(RadialProfile(3, np.linspace(-0.5, 0.5, 41), np.sqrt(1 - np.linspace(-0.5, 0.5, 41) ** 2)))
    assert not cap.r_z_positive


def test_bowl_radial_profile_is_convex(bowl):
    p = bowl.radial_profile(np.linspace(0.5, 80.0, 300), order=4)
    assert convexity_flags(p).all


def test_profile_serialization_round_trip(bowl):
    p = bowl.radial_profile(np.linspace(1, 10, 20))
    q = RadialProfile.from_csv(p.to_csv(), 3)
    np.testing.assert_array_equal(q.r, p.r)
    q = RadialProfile.from_json(p.to_json())
    np.testing.assert_array_equal(q.z, p.z)
    g = GraphProfile.from_json(bowl.profile.to_json())
    np.testing.assert_array_equal(g.f, bowl.profile.f)
    with pytest.raises(ProfileError):
        GraphProfile.from_json(p.to_json())


def test_even_extension_requires_tip():
    with pytest.raises(ProfileError):
        even_diff_matrices(np.linspace(1, 2, 10))


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("order", [2, 4])
def test_curvature_converges_at_stencil_order(order):
    errs = []
    hs = []
    for npts in (41, 81, 161):
        z = np.linspace(-0.5, 0.5, npts)
        rep = curvature_of_radial(RadialProfile(3, z, np.sqrt(1 - z**2), order))
        errs.append(np.max(np.abs(rep.H[~rep.boundary] - 3.0)))
        hs.append(z[1] - z[0])
    rate = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(rate - order) <= 0.2


smooth_coeffs = st.lists(st.floats(-0.3, 0.3), min_size=3, max_size=3)


@settings(max_examples=40, deadline=None)
@given(smooth_coeffs, st.floats(1.0, 4.0))
def test_umbilic_inequality_on_random_profiles(c, base):
    z = np.linspace(-3, 3, 61)
    r = base + c[0] * np.sin(z) + c[1] * np.cos(0.7 * z) + c[2] * z / 3
    rep = curvature_of_radial(RadialProfile(3, z, r, 4))
    assert np.all(rep.A_norm_sq >= rep.H**2 / 3 - 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.2, 1.5), st.floats(1.0, 3.0))
def test_gauge_round_trip_on_monotone_profiles(a, b, p):
    z = np.linspace(0.5, 4.0, 60)
    r = a + b * z**p
    rad = RadialProfile(3, z, r, 4)
    g = convert_gauge(rad)
    back = convert_gauge(g, z)
    np.testing.assert_allclose(back.r, r, rtol=1e-12)
