import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.spectral import (
    CylinderField, ModeIndex, SpectralError, apply_L, cylinder_gaussian_area, eigentable, eigenvalue,
    from_function, gaussian_functionals, hermite_gauss, hermite_norm_sq, merle_zaag_classify, project,
    project_samples, psi, rayleigh_quotient, split,
)

from oracles import cylinder_gaussian_area_quad


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("l, d, expected", [(0, 0, 1.0), (1, 0, 0.5), (2, 0, 0.0), (0, 1, 0.5), (1, 1, 0.0), (3, 0, -0.5)])
def test_eigenvalue_examples(n, l, d, expected):
    assert eigenvalue(ModeIndex(l, d), n) == pytest.approx(expected, abs=1e-15)


def test_degree_two_is_negative_in_every_dimension():
    for n in (3, 4, 6):
        assert eigenvalue(ModeIndex(0, 2), n) == pytest.approx(-1.0 / (n - 1))


def test_eigentable_classes():
    rows = eigentable(3, 6, 3)
    assert len(rows) == 7 * 4
    zero = {(l, d) for l, d, _, _, _, cls in rows if cls == "zero"}
    plus = {(l, d) for l, d, _, _, _, cls in rows if cls == "plus"}
    assert zero == {(2, 0), (1, 1)}
    assert plus == {(0, 0), (1, 0), (0, 1)}


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_cylinder_area_against_quadrature_oracle(n):
    assert cylinder_gaussian_area(n) == pytest.approx(cylinder_gaussian_area_quad(n), rel=1e-10)


def test_hermite_norms():
    z, w = hermite_gauss(30)
    for l in range(8):
        assert w @ psi(l, z) ** 2 == pytest.approx(hermite_norm_sq(l), rel=1e-12)
        assert w @ (psi(l, z) * psi(l + 1, z)) == pytest.approx(0.0, abs=1e-8 * hermite_norm_sq(l))


def test_constant_field_norm_is_the_cylinder_area():
    n = 3
    f = from_function(n, lambda z, om: np.ones_like(z))
    assert f.norm_sq() == pytest.approx(cylinder_gaussian_area(n), rel=1e-12)
    assert rayleigh_quotient(f) == pytest.approx(1.0)


def test_from_function_recovers_modes():
    n = 3
    # z * x_1 on the unit sphere is psi_1 times a degree-one harmonic
    f = from_function(n, lambda z, om: z * om[:, 0], l_max=4, d_max=2)
    c = f.coeffs.copy()
    j = f.modes.index((1, 0))
    assert c[1, j] == pytest.approx(np.sqrt(4 * np.pi / 3), rel=1e-12)
    c[1, j] = 0.0
    assert np.max(np.abs(c)) <= 1e-12
    assert split(f).U_zero == pytest.approx(f.norm_sq())


def test_axisymmetric_projection_round_trip():
    n = 3
    f = CylinderField.from_modes(n, {ModeIndex(0): 0.3, ModeIndex(2): -0.1, ModeIndex(5): 0.02}, l_max=8, d_max=0)
    z, _ = hermite_gauss(20)
    g = project_samples(n, z, f.to_grid(z), l_max=8, d_max=0)
    np.testing.assert_allclose(g.coeffs, f.coeffs, atol=1e-13)
    assert not g.overflow


def test_simpson_projection_on_uniform_grid():
    n = 3
    f = CylinderField.from_modes(n, {ModeIndex(1): 0.5, ModeIndex(2): 0.25}, l_max=4, d_max=0)
    z = np.linspace(-20, 20, 801)
    g = project_samples(n, z, f.to_grid(z), l_max=4, d_max=0)
    np.testing.assert_allclose(g.coeffs, f.coeffs, atol=1e-8)


def test_overflow_is_flagged():
    z, _ = hermite_gauss(40)
    g = project_samples(3, z, psi(10, z), l_max=4, d_max=0)
    assert g.overflow
    with pytest.raises(SpectralError):
        split(g)


def test_field_validation():
    with pytest.raises(SpectralError):
        CylinderField(3, np.zeros((2, 2)))
    with pytest.raises(SpectralError):
        CylinderField.from_modes(3, {ModeIndex(20): 1.0})
    with pytest.raises(SpectralError):
        rayleigh_quotient(CylinderField.zeros(3))
    with pytest.raises(SpectralError):
        CylinderField.from_modes(3, {ModeIndex(0, 1, 0): 1.0}).to_grid(np.zeros(3))
    with pytest.raises(ValueError):
        rayleigh_quotient(CylinderField.from_modes(3, {ModeIndex(0): 1.0}), route="guess")


def test_gaussian_functionals_match_the_operator():
    n = 3
    f = CylinderField.from_modes(n, {ModeIndex(0): 1.0, ModeIndex(1, 1, 2): 0.4, ModeIndex(3, 2, 1): 0.1}, l_max=6, d_max=3)
    g = gaussian_functionals(f, 40.0)
    assert g["norm2"] == pytest.approx(f.norm_sq(), rel=1e-10)
    # <Lf, f> = ||f||^2 - ||grad f||^2
    assert g["dirichlet2"] == pytest.approx(f.norm_sq() - apply_L(f).inner(f), rel=1e-10)
    assert g["band_norm2"] < 1e-30 * g["norm2"]
    with pytest.raises(ValueError):
        gaussian_functionals(f, 0.0)


@pytest.mark.parametrize("rows, regime", [
    ([(t, np.exp(t), 1e-3, 1e-4) for t in np.linspace(0, 3, 20)], "plus-dominated"),
    ([(t, 1e-4 * np.exp(-t), 1.0, 1e-3) for t in np.linspace(0, 3, 20)], "zero-dominated"),
    ([(t, 1.0, 1.0, 1.0) for t in np.linspace(0, 3, 20)], "undecided"),
])
def test_merle_zaag_examples(rows, regime):
    res = merle_zaag_classify(rows)
    assert res.regime == regime


def test_merle_zaag_exponent_and_validation():
    rows = [(t, np.exp(0.5 * t), 0.0, 0.0) for t in np.linspace(0, 3, 30)]
    res = merle_zaag_classify(rows)
    assert res.exponent == pytest.approx(0.5, abs=1e-12)
    assert res.trailing_ratio == 0.0
    with pytest.raises(ValueError):
        merle_zaag_classify(rows[:5])


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

coeff_arrays = st.lists(st.floats(-1, 1), min_size=5 * 9, max_size=5 * 9)


def _field(vals, n=3):
    c = np.array(vals).reshape(5, 9)
    return CylinderField(n, c, l_max=4, d_max=2)


@settings(max_examples=40, deadline=None)
@given(coeff_arrays)
def test_rayleigh_routes_agree(vals):
    f = _field(vals)
    if f.norm_sq() < 1e-6:
        return
    assert rayleigh_quotient(f, "quadrature") == pytest.approx(rayleigh_quotient(f), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(coeff_arrays)
def test_split_is_orthogonal(vals):
    f = _field(vals)
    s = split(f)
    assert s.total == pytest.approx(f.norm_sq(), rel=1e-12, abs=1e-300)
    assert abs(s.plus.inner(s.minus)) <= 1e-12 * max(1.0, f.norm_sq())
    assert np.all(apply_L(s.plus).coeffs * s.plus.coeffs >= 0)
    assert np.all(apply_L(s.minus).coeffs * s.minus.coeffs <= 0)
    np.testing.assert_allclose((s.plus + s.zero + s.minus).coeffs, f.coeffs)


@settings(max_examples=30, deadline=None)
@given(coeff_arrays, st.floats(0.1, 3.0))
def test_projection_is_idempotent_and_L_linear(vals, a):
    f = _field(vals)
    for which in ("plus", "zero", "minus"):
        p = project(f, which)
        np.testing.assert_array_equal(project(p, which).coeffs, p.coeffs)
    np.testing.assert_allclose(apply_L(f.scale(a)).coeffs, a * apply_L(f).coeffs)
