"""Spherical harmonics on S^{n-1} as restrictions of harmonic homogeneous polynomials."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np
from scipy.special import gammaln


def harmonic_dim(n, d):
    """Dimension of degree-d spherical harmonics on S^{n-1}."""
    if d == 0:
        return 1
    if d == 1:
        return n
    return comb(d + n - 1, n - 1) - comb(d + n - 3, n - 1)


def harmonic_eigenvalue(n, d):
    return d * (d + n - 2)


def _monomials(n, d):
    out = []
    for combo in combinations_with_replacement(range(n), d):
        a = [0] * n
        for i in combo:
            a[i] += 1
        out.append(tuple(a))
    return sorted(out, reverse=True)


def sphere_moment(alpha):
    """Integral of x^alpha over the unit sphere S^{n-1}, n = len(alpha)."""
    alpha = np.asarray(alpha)
    if np.any(alpha % 2):
        return 0.0
    b = (alpha + 1) / 2.0
    return float(2.0 * np.exp(np.sum(gammaln(b)) - gammaln(np.sum(b))))


def _add(p, alpha, c):
    if c != 0.0:
        p[alpha] = p.get(alpha, 0.0) + c


def _laplacian(p, skip_first=False):
    out = {}
    for alpha, c in p.items():
        for i in range(1 if skip_first else 0, len(alpha)):
            if alpha[i] >= 2:
                beta = list(alpha)
                beta[i] -= 2
                _add(out, tuple(beta), c * alpha[i] * (alpha[i] - 1))
    return out


def _harmonic_extension(n, seed, d):
    """Unique harmonic polynomial h = sum_k x_1^k g_k with g_0/g_1 from ``seed``."""
    h = {}
    g = {0: {}, 1: {}}
    for alpha, c in seed.items():
        g[alpha[0]][alpha] = c
    for k in range(0, d + 1):
        if k >= 2:
            prev = g.get(k - 2, {})
            lap = _laplacian(prev, skip_first=True)
            g[k] = {}
            for alpha, c in lap.items():
                beta = (alpha[0] + 2,) + alpha[1:]
                _add(g[k], beta, -c / (k * (k - 1)))
        for alpha, c in g.get(k, {}).items():
            _add(h, alpha, c)
    return h


def _inner(p, q):
    s = 0.0
    for a, ca in p.items():
        for b, cb in q.items():
            s += ca * cb * sphere_moment(np.add(a, b))
    return s


@lru_cache(maxsize=None)
def harmonic_basis(n, d):
    """L^2(S^{n-1})-orthonormal basis of degree-d harmonics as monomial dicts.

    Degree 1 gives x_i / sqrt(|S^{n-1}|/n) in coordinate order.
    """
    seeds = [m for m in _monomials(n, d) if m[0] <= 1]
    raw = [_harmonic_extension(n, {m: 1.0}, d) for m in seeds]
    G = np.array([[_inner(p, q) for q in raw] for p in raw])
    # Gram-Schmidt in seed order via Cholesky
    Lc = np.linalg.cholesky(G)
    T = np.linalg.inv(Lc)
    basis = []
    for i in range(len(raw)):
        p = {}
        for j in range(i + 1):
            for alpha, c in raw[j].items():
                _add(p, alpha, T[i, j] * c)
        basis.append(tuple(sorted(p.items())))
    assert len(basis) == harmonic_dim(n, d)
    return tuple(basis)


def eval_poly(poly, x):
    """Evaluate a monomial-dict polynomial at points x of shape (N, n)."""
    x = np.atleast_2d(x)
    out = np.zeros(len(x))
    for alpha, c in poly:
        out += c * np.prod(x ** np.asarray(alpha), axis=1)
    return out


def eval_grad(poly, x):
    """Euclidean gradient of the polynomial at x, shape (N, n)."""
    x = np.atleast_2d(x)
    out = np.zeros_like(x, dtype=float)
    for alpha, c in poly:
        a = np.asarray(alpha)
        for i in range(len(a)):
            if a[i] == 0:
                continue
            b = a.copy()
            b[i] -= 1
            out[:, i] += c * a[i] * np.prod(x**b, axis=1)
    return out


def sphere_gradient(poly, d, omega):
    """Tangential gradient on the unit sphere of a degree-d homogeneous polynomial."""
    g = eval_grad(poly, omega)
    return g - d * eval_poly(poly, omega)[:, None] * omega


def mode_table(n, d_max):
    """List of (d, k) labels in storage order."""
    return [(d, k) for d in range(d_max + 1) for k in range(harmonic_dim(n, d))]


def eval_modes(n, d_max, omega):
    """Matrix (N, n_modes) of orthonormal harmonics at unit vectors omega."""
    cols = []
    for d in range(d_max + 1):
        for poly in harmonic_basis(n, d):
            cols.append(eval_poly(poly, omega))
    return np.stack(cols, axis=1)


def eval_mode_gradients(n, d_max, omega):
    """Array (N, n_modes, n) of tangential gradients."""
    cols = []
    for d in range(d_max + 1):
        for poly in harmonic_basis(n, d):
            cols.append(sphere_gradient(poly, d, omega))
    return np.stack(cols, axis=1)


@lru_cache(maxsize=None)
def s2_quadrature(degree):
    """Product Gauss-Legendre x trapezoid rule on S^2, exact for polynomials up to ``degree``."""
    nt = degree // 2 + 1
    nphi = degree + 1
    x, w = np.polynomial.legendre.leggauss(nt)
    phi = 2 * np.pi * np.arange(nphi) / nphi
    X, P = np.meshgrid(x, phi, indexing="ij")
    W = np.repeat(w, nphi) * (2 * np.pi / nphi)
    s = np.sqrt(1 - X**2)
    pts = np.stack([(s * np.cos(P)).ravel(), (s * np.sin(P)).ravel(), X.ravel()], axis=1)
    return pts, W


def sphere_quadrature(n, degree):
    if n == 2:
        m = degree + 1
        phi = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(m, 2 * np.pi / m)
    if n == 3:
        return s2_quadrature(degree)
    raise NotImplementedError("sphere quadrature is provided for n = 3 only")
