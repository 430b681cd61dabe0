import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from mcflab.harmonics import mode_table
from mcflab.neck import (
    NeckError, NeckPatch, ParabolicNeighborhood, RotationFrame, axis_correction, axis_rotation,
    certify_symmetry, compare_frames, divergence_identity_check, neck_improvement_experiment,
    normal_component, rescaling_exponent, rotation_fields, so_basis, so_inner, solve_linearized_neck,
    symmetry_sup,
)

N = 3
Z = np.linspace(-2.0, 2.0, 41)
TIMES = np.linspace(-2.0, -1.0, 5)


def shifted_cylinder(offset, R=2.0):
    offset = np.asarray(offset, dtype=float)

    def radius(theta, z, t):
        ct = theta @ offset
        return ct + np.sqrt(R**2 - offset @ offset + ct**2)

    return NeckPatch.from_function(N, Z, TIMES, radius, d_max=4)


def wavy_patch():
    def radius(theta, z, t):
        return np.sqrt(-4 * t) + 0.05 * theta[:, 0] * np.sin(z) + 0.03 * (theta[:, 1] * theta[:, 2]) * np.cos(z)

    return NeckPatch.from_function(N, Z, TIMES, radius, d_max=2)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_so_basis_is_orthonormal(n):
    B = so_basis(n)
    assert len(B) == n * (n - 1) // 2
    G = np.array([[so_inner(a, b) for b in B] for a in B])
    np.testing.assert_allclose(G, np.eye(len(B)), atol=1e-15)


@pytest.mark.parametrize("n, lam, kappa", [(3, 0, 0.5), (3, 2, 0.0), (3, 6, -1.0), (4, 3, 0.0)])
def test_rescaling_exponent(n, lam, kappa):
    assert rescaling_exponent(n, lam) == pytest.approx(kappa)


def test_axis_rotation_maps_vertical_to_axis():
    v = np.array([0.3, -0.2, 0.1])
    R = axis_rotation(v)
    np.testing.assert_allclose(R.T @ R, np.eye(4), atol=1e-14)
    a = np.append(v, 1.0)
    np.testing.assert_allclose(R[:, -1], a / np.linalg.norm(a), atol=1e-14)
    np.testing.assert_array_equal(axis_rotation(np.zeros(3)), np.eye(4))


def test_frame_validation():
    with pytest.raises(NeckError):
        RotationFrame(2 * np.eye(4), np.zeros(4), tuple(so_basis(3)))
    with pytest.raises(NeckError):
        RotationFrame(np.eye(4), np.zeros(4), tuple(2 * A for A in so_basis(3)))
    bad = np.zeros((4, 4))
    bad[0, 3], bad[3, 0] = -1.0, 1.0
    with pytest.raises(NeckError):
        RotationFrame(np.eye(4), np.zeros(4), (bad,))


def test_rotation_fields_are_tangent_to_spheres_about_the_axis():
    frame = RotationFrame.from_axis(N, [0.1, -0.2, 0.05], [0.2, 0.0, -0.1], z0=0.5)
    x = np.random.default_rng(1).normal(size=(50, N + 1))
    K = rotation_fields(frame, x)
    np.testing.assert_allclose(np.einsum("api,pi->ap", K, x - frame.q), 0.0, atol=1e-13)
    np.testing.assert_allclose(K @ frame.axis, 0.0, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_frame_covariance(seed):
    # moving the frame by a rigid rotation moves the fields with it
    rng = np.random.default_rng(seed)
    R = np.eye(N + 1)
    R[:N, :N] = Rotation.random(random_state=seed).as_matrix()
    frame = RotationFrame.from_axis(N, rng.normal(size=N) * 0.3, rng.normal(size=N) * 0.3)
    x = rng.normal(size=(10, N + 1))
    K = rotation_fields(frame, x)
    Kc = rotation_fields(frame.conjugated(R), x @ R.T)
    np.testing.assert_allclose(Kc, K @ R.T, atol=1e-12)
    assert compare_frames(frame, frame, x, 1.0) <= 1e-12


def test_round_cylinder_has_no_normal_rotation():
    patch = shifted_cylinder(np.zeros(N))
    frame = RotationFrame.aligned(N)
    for path in ("closed", "direct"):
        val = normal_component(patch, frame, [0.3, 0.5, 0.8], 0.0, -1.0, path=path)
        np.testing.assert_allclose(val, 0.0, atol=1e-10)


def test_closed_and_direct_paths_agree():
    patch = wavy_patch()
    frame = RotationFrame.aligned(N)
    for theta, z in [([1.0, 0.0, 0.0], 0.5), ([0.2, -0.7, 0.4], -1.0), ([0.0, 0.6, 0.8], 1.2)]:
        a = normal_component(patch, frame, theta, z, -1.5, path="closed")
        b = normal_component(patch, frame, theta, z, -1.5, path="direct")
        np.testing.assert_allclose(a, b, atol=1e-8)


def test_normal_component_argument_checks():
    patch = wavy_patch()
    with pytest.raises(NeckError):
        normal_component(patch, RotationFrame.aligned(N), [1, 0, 0], 0.01234, -1.0)
    with pytest.raises(NeckError):
        normal_component(patch, RotationFrame.from_axis(N, [0.1, 0, 0], [0, 0, 0]), [1, 0, 0], 0.0, -1.0, path="closed")
    with pytest.raises(NeckError):
        normal_component(patch, RotationFrame.aligned(N), [1, 0, 0], Z[0], -1.0, path="direct")
    with pytest.raises(ValueError):
        normal_component(patch, RotationFrame.aligned(N), [1, 0, 0], 0.0, -1.0, path="other")


def test_divergence_identities():
    res = divergence_identity_check(wavy_patch())
    assert res["integral"] <= 1e-13
    assert res["moment"] <= 1e-13
    assert res["pointwise"] <= 1e-8
    with pytest.raises(NeckError):
        divergence_identity_check(wavy_patch(), RotationFrame.from_axis(N, [0.1, 0, 0], [0, 0, 0]))


def test_patch_validation():
    nm = len(mode_table(N, 2))
    with pytest.raises(NeckError):
        NeckPatch(N, Z, TIMES, np.ones((5, 41, nm + 1)))
    with pytest.raises(NeckError):
        NeckPatch(N, Z[:4], TIMES, np.ones((5, 4, nm)))
    with pytest.raises(NeckError):
        NeckPatch(N, Z, TIMES, -np.ones((5, 41, nm)))


def test_axis_correction_reads_off_shift_and_tilt():
    c, v = np.array([0.02, -0.01, 0.03]), np.array([0.01, 0.0, -0.02])
    patch = NeckPatch.from_function(N, Z, TIMES, lambda th, z, t: 2.0 + th @ (c + v * z), d_max=2)
    _, _, frame = axis_correction(patch)
    np.testing.assert_allclose(frame.q[:N], c, atol=1e-12)
    np.testing.assert_allclose(frame.axis[:N] / frame.axis[-1], v, atol=1e-12)


def test_certify_recovers_displaced_axis():
    offset = np.array([0.05, 0.0, 0.0])
    patch = shifted_cylinder(offset)
    nb = ParabolicNeighborhood(0.0, -1.0, 1.0, 1.0, patch.H_center())
    cert = certify_symmetry(patch, nb)
    np.testing.assert_allclose(cert.frame.q[:N], offset, atol=1e-6)
    assert cert.epsilon <= 1e-6
    assert cert.amplitude_ok
    # the aligned frame is worse by roughly the offset
    assert symmetry_sup(patch, RotationFrame.aligned(N), nb) > 100 * cert.epsilon


def test_neighborhood_must_be_covered():
    patch = wavy_patch()
    with pytest.raises(NeckError):
        ParabolicNeighborhood(0.0, -1.0, 10.0, 1.0, 1.0).select(patch)


def test_linearized_neck_exact_modes():
    # degree-0 constants decay like (-t)^{-1/2}; affine degree-1 data is stationary
    L, t0, t1 = 16.0, -16.0, -1.0
    nm = len(mode_table(N, 1))

    def init(z):
        v = np.zeros((len(z), nm))
        v[:, 0] = 1.0
        v[:, 1] = 0.2 + 0.1 * z
        return v

    sol = solve_linearized_neck(init, t0, t1, L, n=N, d_max=1, nz=65, rtol=1e-10)
    np.testing.assert_allclose(sol.v[-1, :, 0], np.sqrt(-t0 / -t1), rtol=1e-7)
    np.testing.assert_allclose(sol.v[-1, :, 1], 0.2 + 0.1 * sol.z, atol=1e-8)
    assert sol.heat_residual <= 1e-7
    with pytest.raises(ValueError):
        solve_linearized_neck(init, -1.0, -2.0, L, n=N, d_max=1)
    with pytest.raises(NeckError):
        solve_linearized_neck(np.zeros((3, nm)), t0, t1, L, n=N, d_max=1)


def test_improvement_experiment_guards():
    with pytest.raises(NeckError):
        neck_improvement_experiment(0, 16.0, 1e-4, n=4)
    with pytest.raises(NeckError):
        neck_improvement_experiment(0, 16.0, 0.5, eps1=1e-2)


def test_removable_only_data_is_fully_corrected():
    # shift and tilt alone are undone by the axis fit
    r = neck_improvement_experiment(3, 16.0, 1e-4, removable_only=True)
    assert r.ratio <= 1e-3
    assert r.eps_in == pytest.approx(1e-4, rel=1e-3)
