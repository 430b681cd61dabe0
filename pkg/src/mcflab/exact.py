"""Reference solutions: shrinking cylinder and sphere, the bowl soliton, ADS shrinkers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .geometry import GraphProfile, RadialProfile, check_dimension

ODE_RTOL = 1e-10
ODE_ATOL = 1e-10


class ConstructionError(RuntimeError):
    """An ODE construction (integration or shooting) failed."""


def cylinder_radius(n, t):
    """Radius sqrt(2(n-1)(-t)) of the shrinking cylinder S^{n-1} x R at time t < 0."""
    check_dimension(n)
    t = np.asarray(t, dtype=float)
    if np.any(t >= 0):
        raise ValueError("cylinder radius defined only for t < 0")
    out = np.sqrt(2.0 * (n - 1) * (-t))
    return float(out) if out.ndim == 0 else out


def sphere_radius(n, R0, t):
    """Radius of the shrinking sphere with radius R0 at t = 0."""
    check_dimension(n)
    val = R0**2 - 2.0 * n * np.asarray(t, dtype=float)
    if np.any(val <= 0):
        raise ValueError("sphere has already vanished at the requested time")
    out = np.sqrt(val)
    return float(out) if out.ndim == 0 else out


def _five_point_derivative(func, x, h):
    return (func(x - 2 * h) - 8 * func(x - h) + 8 * func(x + h) - func(x + 2 * h)) / (12 * h)


# ---------------------------------------------------------------------------
# bowl soliton
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BowlSoliton:
    """Rotationally symmetric translator moving upward with speed ``c``.

    ``profile`` holds f(r) with f(0) = 0 on [0, r_max]; ``slope`` holds f_r on
    the same grid.
    """

    n: int
    c: float
    profile: GraphProfile
    slope: np.ndarray
    residual: float
    slope_ratio_at_rmax: float
    _sol: object
    _r_switch: float

    @property
    def r_max(self):
        return float(self.profile.r[-1])

    def _series(self, r):
        alpha = self.c / self.n
        beta = alpha**3 / (self.n + 2)
        return alpha * r**2 / 2 + beta * r**4 / 4, alpha * r + beta * r**3

    def state(self, r):
        """(f, f_r) at arbitrary radii in [0, r_max]."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        f = np.empty_like(r)
        p = np.empty_like(r)
        inner = r < self._r_switch
        f[inner], p[inner] = self._series(r[inner])
        if np.any(~inner):
            y = self._sol(r[~inner])
            f[~inner], p[~inner] = y[0], y[1]
        return f, p

    def height(self, r):
        f = self.state(r)[0]
        return float(f[0]) if np.ndim(r) == 0 else f

    def radius_at_height(self, z, iters=60):
        """Inverse r(z) of the profile for 0 < z <= f(r_max), by safeguarded Newton."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z <= 0) or np.any(z > self.profile.f[-1]):
            raise ValueError("height outside the constructed profile")
        r = PchipInterpolator(self.profile.f, self.profile.r)(z)
        for _ in range(iters):
            f, p = self.state(r)
            step = (f - z) / p
            r = np.clip(r - step, 1e-12, self.r_max)
            if np.max(np.abs(step)) < 1e-14 * max(1.0, np.max(r)):
                break
        return float(r[0]) if scalar else r

    def radial_profile(self, z_grid, order=4):
        return RadialProfile(self.n, z_grid, self.radius_at_height(z_grid), order)

    def translated_height(self, r, t):
        return self.height(r) + self.c * t


def solve_bowl(n, c=1.0, r_max=100.0, tol=ODE_RTOL, num=2001, order=4, residual_tol=1e-6, r_switch=1e-3):
    """Integrate f_rr/(1+f_r^2) + (n-1) f_r/r = c from the smooth tip f(0)=f_r(0)=0.

    A two-term tip series carries the solution to ``r_switch``; DOP853 takes
    over from there.
    """
    check_dimension(n)
    if c <= 0 or r_max <= r_switch:
        raise ValueError("need c > 0 and r_max > r_switch")

    def rhs(r, y):
        p = y[1]
        return [p, (1.0 + p * p) * (c - (n - 1) * p / r)]

    alpha = c / n
    beta = alpha**3 / (n + 2)
    y0 = [alpha * r_switch**2 / 2 + beta * r_switch**4 / 4, alpha * r_switch + beta * r_switch**3]
    sol = solve_ivp(rhs, (r_switch, r_max), y0, method="DOP853", rtol=tol, atol=tol, dense_output=True)
    if sol.status != 0:
        raise ConstructionError(f"bowl integration failed: {sol.message}")

    r = np.linspace(0.0, r_max, num)
    bowl = BowlSoliton(n, c, GraphProfile(n, r, np.zeros(num), order), np.zeros(num), 0.0, 0.0, sol.sol, r_switch)
    f, p = bowl.state(r)

    # translator residual from a differentiated dense output, away from the switch point
    rr = r[r > 10 * r_switch]
    h = 1e-3 * np.maximum(1.0, rr)
    hi = rr + 2 * h > r_max
    h[hi] = (r_max - rr[hi]) / 2.5
    keep = h > 1e-6
    rr, h = rr[keep], h[keep]
    p_r = _five_point_derivative(lambda x: sol.sol(x)[1], rr, h)
    _, pp = bowl.state(rr)
    res = p_r / (1 + pp**2) + (n - 1) * pp / rr - c
    residual = float(np.max(np.abs(res)))
    if residual > residual_tol:
        raise ConstructionError(f"bowl residual {residual:.3g} exceeds {residual_tol:.3g}")
    return BowlSoliton(n, c, GraphProfile(n, r, f, order), p, residual, float(p[-1] / r[-1]), sol.sol, r_switch)


# ---------------------------------------------------------------------------
# ADS shrinkers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShrinkerProfile:
    """Profile u_a(y) on [0, a] of the self-shrinker Sigma_a; tip at y = a."""

    n: int
    a: float
    y: np.ndarray
    u: np.ndarray
    residual: float
    concave: bool
    u_at_2: float
    max_radius: float
    _sol: object
    _s_end: float
    _s0: float

    def u_at(self, y):
        """u_a at arbitrary y in [0, a], by root-finding on the arclength solution."""
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(y)
        for i, yi in enumerate(y):
            if yi >= self.a:
                out[i] = 0.0
                continue
            if yi >= self._sol(self._s0)[0]:
                # inside the tip cap: circle of curvature a/(2n)
                k = self.a / (2.0 * self.n)
                out[i] = np.sqrt(max(0.0, 2 * (self.a - yi) / k - (self.a - yi) ** 2))
                continue
            s = brentq(lambda s: self._sol(s)[0] - yi, self._s0, self._s_end, xtol=1e-14)
            out[i] = self._sol(s)[1]
        return float(out[0]) if scalar else out


def _shrinker_rhs(n):
    def rhs(s, Y):
        y, u, phi = Y
        cphi, sphi = np.cos(phi), np.sin(phi)
        F = (n - 1) * cphi / u - (u * cphi - y * sphi) / 2
        return [-cphi, -sphi, -F]

    return rhs


def solve_shrinker(n, a, tol=1e-12, num=2001, a_min=5.0, s0=1e-4):
    """Shrinker H = <x,nu>/2 of revolution with a smooth tip at y = a.

    Arclength form (y, u, phi) traversed from the tip towards y = 0, where phi
    is the tangent angle of the profile curve oriented toward the tip. The tip
    curvature a/(2n) is forced by regularity.
    """
    check_dimension(n)
    if a < a_min:
        raise ValueError(f"a = {a} below a_min = {a_min}")
    k = a / (2.0 * n)
    y0 = [a - k * s0**2 / 2, s0 - k**2 * s0**3 / 6, -np.pi / 2 + k * s0]

    def hit_plane(s, Y):
        return Y[0]

    hit_plane.terminal = True
    hit_plane.direction = -1

    def hit_axis(s, Y):
        return Y[1] - 1e-8

    hit_axis.terminal = True

    def turned(s, Y):
        return np.cos(Y[2])

    turned.terminal = True
    turned.direction = -1

    sol = solve_ivp(
        _shrinker_rhs(n), (s0, 10.0 * a + 50.0), y0, method="DOP853", rtol=tol, atol=tol,
        dense_output=True, events=(hit_plane, hit_axis, turned),
    )
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise ConstructionError("shrinker profile does not reach y = 0 as a graph")
    s_end = float(sol.t_events[0][0])

    s = np.linspace(s0, s_end, num)
    Y = sol.sol(s)
    y_desc, u_desc = Y[0], Y[1]
    y = np.concatenate([[a], y_desc])[::-1]
    u = np.concatenate([[0.0], u_desc])[::-1]
    y[0] = 0.0

    # residual of the arclength system from a differentiated dense output
    ss = s[(s > 20 * s0) & (s < s_end - 1e-2)]
    h = 1e-3
    rhs = _shrinker_rhs(n)
    deriv = np.stack([_five_point_derivative(lambda x: sol.sol(x)[i], ss, h) for i in range(3)])
    model = np.array(rhs(ss, sol.sol(ss)))
    residual = float(np.max(np.abs(deriv - model)))
    concave = bool(np.all(model[2] >= -1e-9))

    prof = ShrinkerProfile(n, float(a), y, u, residual, concave, 0.0, float(np.max(u)), sol.sol, s_end, s0)
    u2 = float(prof.u_at([2.0])[0]) if a > 2 else float("nan")
    return ShrinkerProfile(n, float(a), y, u, residual, concave, u2, float(np.max(u)), sol.sol, s_end, s0)


def shrinker_barrier_at(s: ShrinkerProfile, K, t, order=2) -> RadialProfile:
    """Sigma_{a,t} = (-t)^{1/2} Sigma_a + (0,...,0,K a^2) as a radial profile.

    The tip node (zero radius) is excluded; nodes are ordered by increasing
    axial coordinate x_{n+1} = K a^2 - (-t)^{1/2} y.
    """
    if t >= 0:
        raise ValueError("barrier defined for t < 0")
    scale = np.sqrt(-t)
    keep = s.u > 0
    y, u = s.y[keep], s.u[keep]
    z = K * s.a**2 - scale * y
    order_idx = np.argsort(z)
    z, r = z[order_idx], scale * u[order_idx]
    if z[-1] - z[0] <= 0:
        raise ValueError("degenerate barrier extent")
    return RadialProfile(s.n, z, r, order)


def barrier_extent(s: ShrinkerProfile, K, t):
    """Axial extent [K a^2 - a (-t)^{1/2}, K a^2] of Sigma_{a,t}."""
    return K * s.a**2 - s.a * np.sqrt(-t), K * s.a**2
