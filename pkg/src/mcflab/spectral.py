"""The operator L on the Gaussian-weighted cylinder: eigensystem, projections, functionals.

Basis functions are psi_l(z) Y(theta) with psi_l(z) = H_l(z/2) (physicists' Hermite)
and Y orthonormal harmonics on the unit sphere. Inner products are true integrals
over the cylinder of radius R = sqrt(2(n-1)) with weight exp(-|x|^2/4), so
||1||^2 is the Gaussian area of the cylinder.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.integrate import simpson
from scipy.special import eval_hermite, gammaln

from .harmonics import (
    eval_mode_gradients,
    eval_modes,
    harmonic_dim,
    harmonic_eigenvalue,
    mode_table,
    sphere_quadrature,
)

L_MAX = 12
D_MAX = 4


class SpectralError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Hermite degree ``l`` times the ``k``-th orthonormal harmonic of degree ``d``."""

    l: int
    d: int = 0
    k: int = 0

    def lam(self, n):
        return harmonic_eigenvalue(n, self.d)


def eigenvalue(idx: ModeIndex, n) -> float:
    return 1.0 - idx.l / 2.0 - idx.lam(n) / (2.0 * (n - 1))


def cylinder_radius_sq(n):
    return 2.0 * (n - 1)


def _measure_const(n):
    R2 = cylinder_radius_sq(n)
    return R2 ** ((n - 1) / 2) * np.exp(-R2 / 4)


def hermite_norm_sq(l):
    """Integral over R of H_l(z/2)^2 exp(-z^2/4) dz."""
    return 2.0 * 2.0**l * factorial(l) * np.sqrt(np.pi)


def psi(l, z):
    return eval_hermite(l, np.asarray(z, dtype=float) / 2.0)


def dpsi(l, z):
    if l == 0:
        return np.zeros_like(np.asarray(z, dtype=float))
    return l * eval_hermite(l - 1, np.asarray(z, dtype=float) / 2.0)


def sphere_volume(n):
    return float(2.0 * np.exp(n / 2 * np.log(np.pi) - gammaln(n / 2)))


def cylinder_gaussian_area(n) -> float:
    """|S^{n-1}| (2(n-1))^{(n-1)/2} e^{-(n-1)/2} 2 sqrt(pi)."""
    return sphere_volume(n) * _measure_const(n) * 2.0 * np.sqrt(np.pi)


def hermite_gauss(npts):
    """Gauss-Hermite nodes/weights for the weight exp(-z^2/4)."""
    x, w = np.polynomial.hermite.hermgauss(npts)
    return 2.0 * x, 2.0 * w


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderField:
    """Coefficients c[l, j] of psi_l Y_j, with harmonics ordered by (d, k)."""

    n: int
    coeffs: np.ndarray
    l_max: int = L_MAX
    d_max: int = D_MAX
    overflow: bool = False

    def __post_init__(self):
        shape = (self.l_max + 1, len(mode_table(self.n, self.d_max)))
        if self.coeffs.shape != shape:
            raise SpectralError(f"coefficient array must have shape {shape}")

    @classmethod
    def zeros(cls, n, l_max=L_MAX, d_max=D_MAX):
        return cls(n, np.zeros((l_max + 1, len(mode_table(n, d_max)))), l_max, d_max)

    @classmethod
    def from_modes(cls, n, modes: dict, l_max=L_MAX, d_max=D_MAX):
        f = cls.zeros(n, l_max, d_max)
        c = f.coeffs
        table = mode_table(n, d_max)
        for idx, val in modes.items():
            if idx.l > l_max or idx.d > d_max:
                raise SpectralError(f"mode {idx} outside truncation")
            c[idx.l, table.index((idx.d, idx.k))] += val
        return f

    @property
    def modes(self):
        return mode_table(self.n, self.d_max)

    def eigenvalues(self):
        lam = np.array([harmonic_eigenvalue(self.n, d) for d, _ in self.modes])
        l = np.arange(self.l_max + 1)[:, None]
        return 1.0 - l / 2.0 - lam[None, :] / (2.0 * (self.n - 1))

    def mode_norms_sq(self):
        """||psi_l Y_j||^2 under the cylinder Gaussian measure."""
        h = np.array([hermite_norm_sq(l) for l in range(self.l_max + 1)])
        return _measure_const(self.n) * np.repeat(h[:, None], len(self.modes), axis=1)

    def with_coeffs(self, c):
        return CylinderField(self.n, c, self.l_max, self.d_max, self.overflow)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def scale(self, a):
        return self.with_coeffs(a * self.coeffs)

    def norm_sq(self):
        return float(np.sum(self.coeffs**2 * self.mode_norms_sq()))

    def inner(self, other):
        return float(np.sum(self.coeffs * other.coeffs * self.mode_norms_sq()))

    # evaluation ---------------------------------------------------------
    def radial_coeffs(self, z):
        """Per-harmonic profiles a_j(z) = sum_l c[l, j] psi_l(z), shape (len(z), modes)."""
        P = np.stack([psi(l, z) for l in range(self.l_max + 1)], axis=1)
        return P @ self.coeffs

    def radial_coeffs_dz(self, z):
        P = np.stack([dpsi(l, z) for l in range(self.l_max + 1)], axis=1)
        return P @ self.coeffs

    def evaluate(self, z, omega):
        """Values on the tensor grid z x omega (unit vectors), shape (len(z), len(omega))."""
        Y = eval_modes(self.n, self.d_max, omega)
        return self.radial_coeffs(z) @ Y.T

    def to_grid(self, z, omega=None):
        if omega is None:
            if np.any(self.coeffs[:, 1:]):
                raise SpectralError("non-axisymmetric field needs sphere points")
            return self.coeffs[:, 0] @ np.stack([psi(l, z) for l in range(self.l_max + 1)]) / np.sqrt(sphere_volume(self.n))
        return self.evaluate(z, omega)


def _z_weights(z):
    z = np.asarray(z, dtype=float)
    # exact Gauss-Hermite nodes are recognised; otherwise composite Simpson
    if len(z) <= 150:
        gz, gw = hermite_gauss(len(z))
        if np.allclose(np.sort(z), gz, rtol=0, atol=1e-12):
            return gw[np.argsort(np.argsort(z))], True
    e = np.eye(len(z))
    w = np.array([simpson(e[i], x=z) for i in range(len(z))])
    return w * np.exp(-z**2 / 4), False


def project_samples(n, z, values, l_max=L_MAX, d_max=D_MAX, omega=None, sphere_weights=None, tol=1e-10):
    """Project grid samples onto the truncated basis.

    ``values`` has shape (len(z),) for axisymmetric data or (len(z), len(omega)).
    Gauss-Hermite nodes in z are integrated exactly; any other z grid is
    integrated by composite Simpson. Sets ``overflow`` when the samples carry
    norm outside the truncation beyond ``tol`` (relative).
    """
    z = np.asarray(z, dtype=float)
    values = np.asarray(values, dtype=float)
    wz, _ = _z_weights(z)
    P = np.stack([psi(l, z) for l in range(l_max + 1)], axis=1)
    hn = np.array([hermite_norm_sq(l) for l in range(l_max + 1)])
    nm = len(mode_table(n, d_max))
    if values.ndim == 1:
        c = np.zeros((l_max + 1, nm))
        s0 = np.sqrt(sphere_volume(n))
        c[:, 0] = (P.T @ (wz * values)) / hn * s0
        total = s0**2 * float(wz @ values**2)
    else:
        if omega is None:
            raise SpectralError("sphere points required for non-axisymmetric samples")
        if sphere_weights is None:
            raise SpectralError("sphere quadrature weights required")
        Y = eval_modes(n, d_max, omega)
        proj_sphere = values @ (sphere_weights[:, None] * Y)
        c = (P.T @ (wz[:, None] * proj_sphere)) / hn[:, None]
        total = float(wz @ (values**2 @ sphere_weights))
    f = CylinderField(n, c, l_max, d_max)
    total *= _measure_const(n)
    captured = f.norm_sq()
    overflow = bool(total - captured > tol * max(total, 1e-300))
    return CylinderField(n, c, l_max, d_max, overflow)


def from_function(n, func, l_max=L_MAX, d_max=D_MAX, z_nodes=None, sphere_degree=None):
    """Project ``func(z, omega)`` (omega unit vectors, vectorised) by Gauss quadrature."""
    nz = z_nodes or (l_max + 8)
    z, _ = hermite_gauss(nz)
    deg = sphere_degree or (2 * d_max + 8)
    omega, w = sphere_quadrature(n, deg)
    Z = np.repeat(z, len(omega))
    Om = np.tile(omega, (len(z), 1))
    vals = np.asarray(func(Z, Om), dtype=float).reshape(len(z), len(omega))
    return project_samples(n, z, vals, l_max, d_max, omega, w)


# ---------------------------------------------------------------------------
# operator and projections
# ---------------------------------------------------------------------------


def apply_L(f: CylinderField) -> CylinderField:
    """Exact action in coefficient space (L is diagonal in this basis)."""
    return f.with_coeffs(f.coeffs * f.eigenvalues())


@dataclass(frozen=True)
class SpectralSplit:
    plus: CylinderField
    zero: CylinderField
    minus: CylinderField
    U_plus: float
    U_zero: float
    U_minus: float

    @property
    def total(self):
        return self.U_plus + self.U_zero + self.U_minus


def _mask(f, which, tol=1e-14):
    ev = f.eigenvalues()
    if which == "plus":
        return ev > tol
    if which == "zero":
        return np.abs(ev) <= tol
    return ev < -tol


def project(f: CylinderField, which) -> CylinderField:
    return f.with_coeffs(np.where(_mask(f, which), f.coeffs, 0.0))


def split(f: CylinderField) -> SpectralSplit:
    if f.overflow:
        raise SpectralError("field exceeds the truncation; raise l_max/d_max or refine the quadrature")
    p, z, m = (project(f, w) for w in ("plus", "zero", "minus"))
    return SpectralSplit(p, z, m, p.norm_sq(), z.norm_sq(), m.norm_sq())


def rayleigh_quotient(f: CylinderField, route="coefficients", z_nodes=None) -> float:
    """<Lf, f>/||f||^2.

    'coefficients' uses the diagonal action; 'quadrature' integrates
    -|f_z|^2 - |grad_S f|^2/(2(n-1)) + f^2 against the Gaussian weight on a
    Gauss-Hermite x sphere product rule, never touching the eigenvalue formula.
    """
    nrm = f.norm_sq()
    if nrm <= 0:
        raise SpectralError("zero field")
    if route == "coefficients":
        return apply_L(f).inner(f) / nrm
    if route != "quadrature":
        raise ValueError(f"unknown route {route!r}")
    z, wz = hermite_gauss(z_nodes or (f.l_max + 4))
    omega, ws = sphere_quadrature(f.n, 2 * f.d_max + 2)
    Y = eval_modes(f.n, f.d_max, omega)
    G = eval_mode_gradients(f.n, f.d_max, omega)
    a = f.radial_coeffs(z)
    a_z = f.radial_coeffs_dz(z)
    vals = a @ Y.T
    vz = a_z @ Y.T
    grad = np.einsum("zj,pja->zpa", a, G)
    W = wz[:, None] * ws[None, :]
    R2 = cylinder_radius_sq(f.n)
    num = np.sum(W * (-(vz**2) - np.sum(grad**2, axis=2) / R2 + vals**2))
    den = np.sum(W * vals**2)
    return float(num / den)


def gaussian_functionals(f: CylinderField, L_cut, nodes=400):
    """Truncated Gaussian integrals over the slab |z| <= L_cut.

    Returns norm2 (of f), dirichlet2 (of the cylinder gradient) and band_norm2
    (of f over L_cut/2 <= |z| <= L_cut).
    """
    if L_cut <= 0:
        raise ValueError("L_cut must be positive")
    lam = np.array([harmonic_eigenvalue(f.n, d) for d, _ in f.modes])
    R2 = cylinder_radius_sq(f.n)
    const = _measure_const(f.n)

    def integrate(a, b, grad=False):
        x, w = np.polynomial.legendre.leggauss(nodes)
        z = 0.5 * (b - a) * x + 0.5 * (a + b)
        w = 0.5 * (b - a) * w * np.exp(-z**2 / 4)
        A = f.radial_coeffs(z)
        val = np.sum(A**2, axis=1)
        if grad:
            val = np.sum(f.radial_coeffs_dz(z) ** 2, axis=1) + (A**2 @ lam) / R2
        return const * float(w @ val)

    norm2 = integrate(-L_cut, L_cut)
    dir2 = integrate(-L_cut, L_cut, grad=True)
    band = integrate(-L_cut, -L_cut / 2) + integrate(L_cut / 2, L_cut)
    return {"norm2": norm2, "dirichlet2": dir2, "band_norm2": band}


def eigentable(n, l_max=6, d_max=3):
    """Rows (l, d, lambda_d, multiplicity, eigenvalue, class)."""
    rows = []
    for l in range(l_max + 1):
        for d in range(d_max + 1):
            ev = eigenvalue(ModeIndex(l, d), n)
            cls = "plus" if ev > 1e-14 else ("zero" if abs(ev) <= 1e-14 else "minus")
            rows.append((l, d, harmonic_eigenvalue(n, d), harmonic_dim(n, d), ev, cls))
    return rows


# ---------------------------------------------------------------------------
# Merle-Zaag regime classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeResult:
    regime: str
    exponent: float
    trailing_ratio: float
    window_start: float


def merle_zaag_classify(series, threshold=0.1, window=0.3, min_samples=10) -> RegimeResult:
    """Decide which of U_+ / U_0 dominates over the trailing ``window`` of samples.

    ``series`` rows are (tau, U_+, U_0, U_-). The exponent is the least-squares
    slope of log U_+ against tau over all samples.
    """
    s = np.asarray(series, dtype=float)
    if s.ndim != 2 or s.shape[1] != 4 or len(s) < min_samples:
        raise ValueError(f"need at least {min_samples} rows of (tau, U_+, U_0, U_-)")
    tau, up, u0, um = s.T
    k0 = int(np.floor((1 - window) * len(s)))
    tail = slice(k0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_plus = np.max((u0[tail] + um[tail]) / up[tail])
        r_zero = np.max((up[tail] + um[tail]) / u0[tail])
    if r_plus < threshold:
        regime, ratio = "plus-dominated", r_plus
    elif r_zero < threshold:
        regime, ratio = "zero-dominated", r_zero
    else:
        regime, ratio = "undecided", min(r_plus, r_zero)
    good = up > 0
    exponent = float(np.polyfit(tau[good], np.log(up[good]), 1)[0]) if good.sum() >= 2 else float("nan")
    return RegimeResult(regime, exponent, float(ratio), float(tau[k0]))
