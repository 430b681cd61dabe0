import numpy as np
import pytest

from mcflab.harmonics import (
    eval_mode_gradients, eval_modes, harmonic_basis, harmonic_dim, harmonic_eigenvalue, mode_table,
    s2_quadrature, sphere_moment, sphere_quadrature,
)


@pytest.mark.parametrize("n, d, dim", [(3, 0, 1), (3, 1, 3), (3, 2, 5), (3, 4, 9), (4, 2, 9), (4, 3, 16), (5, 2, 14)])
def test_harmonic_dimension(n, d, dim):
    assert harmonic_dim(n, d) == dim
    assert len(harmonic_basis(n, d)) == dim


@pytest.mark.parametrize("alpha, expected", [((0, 0, 0), 4 * np.pi), ((2, 0, 0), 4 * np.pi / 3), ((1, 1, 0), 0.0),
                                             ((2, 2, 0), 4 * np.pi / 15), ((0, 0), 2 * np.pi), ((4, 0, 0, 0), np.pi**2 / 4)])
def test_sphere_moments(alpha, expected):
    assert sphere_moment(alpha) == pytest.approx(expected, rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_orthonormality_and_eigenvalues(n):
    d_max = 4
    omega, w = sphere_quadrature(n, 2 * d_max + 2)
    Y = eval_modes(n, d_max, omega)
    np.testing.assert_allclose(Y.T @ (w[:, None] * Y), np.eye(Y.shape[1]), atol=1e-12)
    # the Dirichlet form of an orthonormal degree-d harmonic is d(d + n - 2)
    G = eval_mode_gradients(n, d_max, omega)
    energy = np.einsum("p,pja,pja->j", w, G, G)
    expected = [harmonic_eigenvalue(n, d) for d, _ in mode_table(n, d_max)]
    np.testing.assert_allclose(energy, expected, atol=1e-11)


def test_degree_one_basis_is_scaled_coordinates():
    omega, _ = s2_quadrature(4)
    Y1 = eval_modes(3, 1, omega)[:, 1:]
    np.testing.assert_allclose(Y1, omega / np.sqrt(4 * np.pi / 3), atol=1e-14)


def test_gradients_are_tangential():
    omega, _ = s2_quadrature(8)
    G = eval_mode_gradients(3, 3, omega)
    np.testing.assert_allclose(np.einsum("pja,pa->pj", G, omega), 0.0, atol=1e-12)


def test_quadrature_weights_sum_to_area():
    _, w = s2_quadrature(10)
    assert w.sum() == pytest.approx(4 * np.pi, rel=1e-14)
    with pytest.raises(NotImplementedError):
        sphere_quadrature(4, 6)
