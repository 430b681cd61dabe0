import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.exact import (
    ConstructionError, barrier_extent, cylinder_radius, shrinker_barrier_at, solve_bowl, solve_shrinker,
    sphere_radius,
)
from mcflab.geometry import curvature_of_graph, diff_matrices

# frozen from tests/oracles.py (fixed-step RK4 with Richardson; graph-form LSODA shooting),
# each agreeing with the package to better than 1e-8 when recorded
BOWL_F1 = 0.168517749643
BOWL_F10 = 23.1098335068
SHRINKER_U2 = {10.0: 1.98376365361, 20.0: 1.99530865815}


@pytest.fixture(scope="module")
def bowl():
    return solve_bowl(3, 1.0, 100.0)


@pytest.fixture(scope="module", params=[10.0, 20.0])
def shrinker(request):
    return solve_shrinker(3, request.param)


@pytest.mark.parametrize("n, t, expected", [(3, -1.0, 2.0), (3, -2.0, 2 * np.sqrt(2)), (4, -1.0, np.sqrt(6))])
def test_cylinder_radius(n, t, expected):
    assert cylinder_radius(n, t) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("n, R0, t, expected", [(3, 1.0, 0.0, 1.0), (3, 1.0, -4.0, 5.0), (5, 2.0, -1.0, np.sqrt(14))])
def test_sphere_radius(n, R0, t, expected):
    assert sphere_radius(n, R0, t) == pytest.approx(expected, rel=1e-15)


def test_closed_forms_reject_bad_times():
    with pytest.raises(ValueError):
        cylinder_radius(3, 0.0)
    with pytest.raises(ValueError):
        sphere_radius(3, 1.0, 1.0)


def test_bowl_tip_and_asymptotics(bowl):
    f_r, f_rr, _ = bowl.profile.derivatives()
    assert f_rr[0] == pytest.approx(1 / 3, abs=1e-6)
    assert bowl.slope_ratio_at_rmax == pytest.approx(0.5, rel=0.01)
    assert bowl.residual <= 1e-6
    assert np.all(np.diff(bowl.slope) > 0)


def test_bowl_regression_constants(bowl):
    assert bowl.height(1.0) == pytest.approx(BOWL_F1, abs=1e-10)
    assert bowl.height(10.0) == pytest.approx(BOWL_F10, abs=1e-8)


def test_bowl_rr_z_approaches_limit(bowl):
    r = np.array([20.0, 50.0, 100.0])
    _, p = bowl.state(r)
    rrz = r / p
    assert abs(rrz[-1] - 2.0) < abs(rrz[0] - 2.0)
    assert rrz[-1] == pytest.approx(2.0, rel=1e-3)


def test_bowl_tip_curvature_by_graph(bowl):
    assert curvature_of_graph(bowl.profile).H[0] == pytest.approx(1.0, abs=1e-6)


def test_radius_at_height_inverts_height(bowl):
    r = np.array([0.5, 3.0, 40.0])
    np.testing.assert_allclose(bowl.radius_at_height(bowl.height(r)), r, rtol=1e-12)
    with pytest.raises(ValueError):
        bowl.radius_at_height(-1.0)


def test_bowl_rejects_bad_arguments():
    with pytest.raises(ValueError):
        solve_bowl(3, -1.0)
    with pytest.raises(ConstructionError):
        solve_bowl(3, 1.0, 10.0, residual_tol=1e-30)


def test_shrinker_bounds(shrinker):
    a = shrinker.a
    body = shrinker.u > 0
    lower = 2.0 * np.sqrt(np.clip(1 - (shrinker.y[body] / a) ** 2, 0, None))
    assert shrinker.u_at(2.0) <= 2.0 - a**-2
    assert np.all(shrinker.u[body] >= lower)
    assert shrinker.residual <= 1e-8
    assert shrinker.concave


def test_shrinker_regression(shrinker):
    assert shrinker.u_at(2.0) == pytest.approx(SHRINKER_U2[shrinker.a], abs=1e-9)


def test_cylinder_solves_shrinker_identity():
    # -(n-1)/u + u/2 = 0 at u = sqrt(2(n-1))
    for n in (3, 4, 5):
        u = np.sqrt(2.0 * (n - 1))
        assert -(n - 1) / u + u / 2 == pytest.approx(0.0, abs=1e-15)


def test_shrinker_rejects_small_a():
    with pytest.raises(ValueError):
        solve_shrinker(3, 2.0)


def test_barrier_identity_embedding(shrinker):
    p = shrinker_barrier_at(shrinker, 0.0, -1.0)
    body = shrinker.u > 0
    np.testing.assert_allclose(np.sort(-p.z), np.sort(shrinker.y[body]))


def test_barrier_tip_position():
    s = solve_shrinker(3, 10.0)
    K = 10.0
    t = -4 * K**2 * s.a**2
    lo, hi = barrier_extent(s, K, t)
    assert lo == pytest.approx(-(-t) / (4 * K), rel=1e-12)
    assert hi == K * s.a**2


@settings(max_examples=15, deadline=None)
@given(st.floats(0.25, 16.0))
def test_barrier_scales_with_sqrt_time(tt):
    s = solve_shrinker(3, 10.0)
    p1 = shrinker_barrier_at(s, 1.0, -1.0)
    p2 = shrinker_barrier_at(s, 1.0, -tt)
    np.testing.assert_allclose(p2.r, np.sqrt(tt) * p1.r, rtol=1e-13)


@pytest.mark.parametrize("order", [2, 4])
def test_sphere_law_residual_converges(order):
    # z-slice of the shrinking sphere: r_t + (residual) with r(z,t) = sqrt(R(t)^2 - z^2)
    errs, hs = [], []
    for npts in (41, 81, 161):
        z = np.linspace(-0.5, 0.5, npts)
        R2 = 1.0
        r = np.sqrt(R2 - z**2)
        D1, D2, flags = diff_matrices(z, order)
        r_z, r_zz = D1 @ r, D2 @ r
        r_t = -3.0 / r  # d/dt sqrt(R^2 - z^2) with d(R^2)/dt = -2n, n = 3
        res = r_zz / (1 + r_z**2) - 2 / r - r_t
        errs.append(np.max(np.abs(res[~flags])))
        hs.append(z[1] - z[0])
    assert abs(np.polyfit(np.log(hs), np.log(errs), 1)[0] - order) <= 0.3
