"""Method-of-lines solvers for axisymmetric MCF in the radial, graph and rescaled gauges."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.sparse.linalg import splu
from scipy.special import erfc, gamma

from .geometry import (
    GraphProfile,
    RadialProfile,
    curvature_of_graph,
    curvature_of_radial,
    diff_matrices,
    even_diff_matrices,
)

GAUGES = ("radial", "graph", "rescaled")
BC_KINDS = ("dirichlet", "reference", "neumann", "tip")

Value = Union[float, Callable[[float], float]]


class FlowError(RuntimeError):
    pass


class PinchError(FlowError):
    """The radius reached r_min; ``trajectory`` holds everything computed so far."""

    def __init__(self, msg, trajectory):
        super().__init__(msg)
        self.trajectory = trajectory


# ---------------------------------------------------------------------------
# boundary conditions and step control
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EndCondition:
    kind: str
    value: Value = 0.0

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    def at(self, t):
        return float(self.value(t)) if callable(self.value) else float(self.value)


@dataclass(frozen=True)
class BoundaryCondition:
    left: EndCondition
    right: EndCondition

    @classmethod
    def dirichlet(cls, left, right):
        return cls(EndCondition("dirichlet", left), EndCondition("dirichlet", right))

    @classmethod
    def reference(cls, left, right):
        """Both ends follow an exact solution; ``left``/``right`` are callables of t."""
        return cls(EndCondition("reference", left), EndCondition("reference", right))

    @classmethod
    def tip(cls, right: EndCondition):
        return cls(EndCondition("tip"), right)

    def validate(self, gauge, has_tip=False):
        if self.right.kind == "tip":
            raise ValueError("a tip can only sit at the left end")
        if self.left.kind == "tip" and not (gauge == "graph" and has_tip):
            raise ValueError("tip condition needs a graph profile starting at r = 0")
        if gauge == "graph" and has_tip and self.left.kind != "tip":
            raise ValueError("graph profile with r[0] = 0 must use the tip condition")

    def describe(self):
        def one(e):
            if e.kind == "tip":
                return "tip"
            return e.kind if callable(e.value) else f"{e.kind}={e.value:g}"

        return f"{one(self.left)}|{one(self.right)}"


@dataclass(frozen=True)
class StepControl:
    """Time stepping: 'radau' (adaptive, L-stable, order 5), 'sdirk2' (fixed dt,
    L-stable, order 2) or 'explicit' (RK45, only with allow_explicit)."""

    method: str = "radau"
    rtol: float = 1e-8
    atol: float = 1e-10
    dt: float | None = None
    max_step: float = np.inf
    n_snapshots: int = 11
    t_eval: tuple | None = None
    r_min: float = 1e-6
    allow_explicit: bool = False
    raise_on_pinch: bool = False
    newton_tol: float = 1e-12

    def snapshot_times(self, t0, t1):
        if self.t_eval is not None:
            te = np.asarray(self.t_eval, dtype=float)
            if te[0] != t0 or te[-1] != t1 or np.any(np.diff(te) <= 0):
                raise ValueError("t_eval must increase from t0 to t1")
            return te
        return np.linspace(t0, t1, self.n_snapshots)


# ---------------------------------------------------------------------------
# trajectory
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowTrajectory:
    gauge: str
    n: int
    grid: np.ndarray
    times: np.ndarray
    values: np.ndarray
    bc: str
    order: int
    stats: dict = field(default_factory=dict)
    status: str = "ok"

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("one value row per snapshot time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must increase strictly")

    def __len__(self):
        return len(self.times)

    def profile(self, i):
        if self.gauge == "graph":
            return GraphProfile(self.n, self.grid, self.values[i], self.order)
        return RadialProfile(self.n, self.grid, self.values[i], self.order)

    @property
    def snapshots(self):
        return [(float(t), self.profile(i)) for i, t in enumerate(self.times)]

    def to_csv(self):
        """Long format: one row per (time, node)."""
        key = "r" if self.gauge == "graph" else "z"
        val = "f" if self.gauge == "graph" else ("rho" if self.gauge == "rescaled" else "r")
        lines = [f"# schema: mcflab.trajectory/1 gauge={self.gauge} n={self.n}", f"t,{key},{val}"]
        for t, row in zip(self.times, self.values):
            lines.extend(f"{t!r},{g!r},{v!r}" for g, v in zip(self.grid, row))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# semi-discrete systems
# ---------------------------------------------------------------------------


class _System:
    """u_t = F(u) on the unknown nodes, with the boundary map u_full = A u + b(t)."""

    def __init__(self, gauge, n, grid, order, bc: BoundaryCondition, has_tip=False):
        self.gauge, self.n, self.grid = gauge, n, np.asarray(grid, dtype=float)
        if has_tip:
            self.D1, self.D2, _ = even_diff_matrices(self.grid, order)
        else:
            self.D1, self.D2, _ = diff_matrices(self.grid, order)
        self.bc = bc
        npts = len(self.grid)
        self.free = np.ones(npts, dtype=bool)
        for end, idx in ((bc.left, 0), (bc.right, npts - 1)):
            if end.kind != "tip":
                self.free[idx] = False
        self.free_idx = np.flatnonzero(self.free)
        self._build_map()
        if gauge == "graph" and has_tip:
            self.inv_r = np.zeros(npts)
            self.inv_r[1:] = 1.0 / self.grid[1:]
            self.tip = True
        else:
            self.inv_r = None if gauge != "graph" else 1.0 / self.grid
            self.tip = False

    def _build_map(self):
        npts = len(self.grid)
        nf = len(self.free_idx)
        A = sp.lil_matrix((npts, nf))
        for k, i in enumerate(self.free_idx):
            A[i, k] = 1.0
        self.neumann = {}
        D1 = self.D1.tocsr()
        for end, idx in ((self.bc.left, 0), (self.bc.right, npts - 1)):
            if end.kind == "neumann":
                # D1[idx] @ u = slope, solved for u[idx]
                row = D1.getrow(idx).toarray().ravel()
                diag = row[idx]
                if abs(diag) < 1e-14:
                    raise FlowError("degenerate Neumann stencil")
                other = row.copy()
                other[idx] = 0.0
                self.neumann[idx] = (diag, other)
        # rows of A for Neumann ends: u_idx = (slope - other . u_full) / diag; the
        # other end being Dirichlet is folded into b(t) below
        self.A_free = A.tocsr()
        self.A = self.A_free.copy().tolil()
        for idx, (diag, other) in self.neumann.items():
            coeff = -(other[self.free_idx]) / diag
            for k, cval in enumerate(coeff):
                if cval != 0.0:
                    self.A[idx, k] = cval
        self.A = self.A.tocsr()

    def full(self, u, t):
        out = np.empty(len(self.grid))
        out[self.free_idx] = u
        fixed = {}
        for end, idx in ((self.bc.left, 0), (self.bc.right, len(self.grid) - 1)):
            if end.kind in ("dirichlet", "reference"):
                out[idx] = end.at(t)
                fixed[idx] = out[idx]
        for idx, (diag, other) in self.neumann.items():
            end = self.bc.left if idx == 0 else self.bc.right
            acc = other[self.free_idx] @ u
            for j, v in fixed.items():
                acc += other[j] * v
            out[idx] = (end.at(t) - acc) / diag
        return out

    def rhs_full(self, U):
        u_z = self.D1 @ U
        u_zz = self.D2 @ U
        w = 1.0 + u_z**2
        if self.gauge == "graph":
            rot = (self.n - 1) * u_z * self.inv_r
            if self.tip:
                rot[0] = (self.n - 1) * u_zz[0]
            return u_zz / w + rot
        F = u_zz / w - (self.n - 1) / U
        if self.gauge == "rescaled":
            F = F + 0.5 * (U - self.grid * u_z)
        return F

    def jac_full(self, U):
        u_z = self.D1 @ U
        u_zz = self.D2 @ U
        w = 1.0 + u_z**2
        J = sp.diags(1.0 / w) @ self.D2 - sp.diags(2.0 * u_z * u_zz / w**2) @ self.D1
        if self.gauge == "graph":
            d = (self.n - 1) * self.inv_r
            J = J + sp.diags(d) @ self.D1
            if self.tip:
                J = J.tolil()
                J[0, :] = ((1.0 + self.n - 1) * self.D2.getrow(0)).toarray()
                J = J.tocsr()
            return J.tocsr()
        J = J + sp.diags((self.n - 1) / U**2)
        if self.gauge == "rescaled":
            J = J + 0.5 * sp.identity(len(U)) - 0.5 * sp.diags(self.grid) @ self.D1
        return J.tocsr()

    def rhs(self, t, u):
        return self.rhs_full(self.full(u, t))[self.free_idx]

    def jac(self, t, u):
        J = self.jac_full(self.full(u, t))
        return (J @ self.A)[self.free_idx, :].tocsc()


def _sdirk2(system, u0, t0, t1, times, ctrl, pinch_check):
    """Two-stage L-stable SDIRK, gamma = 1 - 1/sqrt(2), fixed step with Newton."""
    g = 1.0 - 1.0 / np.sqrt(2.0)
    nsteps = int(np.ceil((t1 - t0) / ctrl.dt - 1e-9))
    grid_t = np.linspace(t0, t1, nsteps + 1)
    # snapshot times must be step points
    want = np.searchsorted(grid_t, times - 1e-12 * max(1.0, abs(t1)))
    if np.any(np.abs(grid_t[np.clip(want, 0, nsteps)] - times) > 1e-9 * max(1.0, abs(t1))):
        grid_t = np.unique(np.concatenate([grid_t, times]))
    I = sp.identity(len(u0), format="csc")
    out = [u0.copy()]
    u = u0.copy()
    stats = {"steps": 0, "newton": 0}
    snap_pos = 1

    def solve_stage(t_stage, base, h):
        k = system.rhs(t_stage, base)
        for _ in range(20):
            y = base + h * g * k
            res = k - system.rhs(t_stage, y)
            J = system.jac(t_stage, y)
            dk = splu((I - h * g * J).tocsc()).solve(-res)
            k = k + dk
            stats["newton"] += 1
            if np.max(np.abs(dk)) * h < ctrl.newton_tol * max(1.0, np.max(np.abs(y))):
                break
        else:
            raise FlowError("SDIRK Newton iteration did not converge")
        return k

    for j in range(len(grid_t) - 1):
        t, h = grid_t[j], grid_t[j + 1] - grid_t[j]
        k1 = solve_stage(t + g * h, u, h)
        base = u + h * (1 - g) * k1
        k2 = solve_stage(t + h, base, h)
        u = u + h * ((1 - g) * k1 + g * k2)
        stats["steps"] += 1
        if pinch_check(u):
            return np.array(out), stats, grid_t[j + 1], u
        if snap_pos < len(times) and abs(grid_t[j + 1] - times[snap_pos]) <= 1e-9 * max(1.0, abs(t1)):
            out.append(u.copy())
            snap_pos += 1
    return np.array(out), stats, None, None


def _evolve(gauge, n, grid, u0_full, t0, t1, bc, ctrl, order, has_tip=False):
    if t1 < t0:
        raise ValueError("need t0 <= t1")
    bc.validate(gauge, has_tip)
    if t1 == t0:
        u = np.asarray(u0_full, dtype=float)[None, :].copy()
        return FlowTrajectory(gauge, n, np.asarray(grid, dtype=float), np.array([float(t0)]), u, bc.describe(), order, {"steps": 0})
    ctrl = ctrl or StepControl()
    system = _System(gauge, n, grid, order, bc, has_tip)
    u0 = np.asarray(u0_full, dtype=float)[system.free_idx]
    times = ctrl.snapshot_times(t0, t1)
    positive = gauge != "graph"

    def pinch_event(t, u):
        return np.min(u) - ctrl.r_min

    pinch_event.terminal = True
    pinch_event.direction = -1

    status = "ok"
    if ctrl.method in ("radau", "explicit"):
        if ctrl.method == "explicit" and not ctrl.allow_explicit:
            raise ValueError("explicit stepping is disabled; set allow_explicit=True")
        kwargs = dict(rtol=ctrl.rtol, atol=ctrl.atol, t_eval=times, dense_output=False, max_step=ctrl.max_step)
        if ctrl.method == "radau":
            kwargs.update(method="Radau", jac=system.jac)
        else:
            kwargs.update(method="RK45")
        if positive:
            kwargs["events"] = pinch_event
        sol = solve_ivp(system.rhs, (t0, t1), u0, **kwargs)
        if sol.status == -1:
            raise FlowError(f"time integration failed: {sol.message}")
        snaps_t = sol.t
        snaps_u = sol.y.T
        stats = {"nfev": int(sol.nfev), "njev": int(sol.njev), "nlu": int(sol.nlu)}
        if sol.status == 1:
            status = "pinched"
            stats["pinch_time"] = float(sol.t_events[0][0])
    elif ctrl.method == "sdirk2":
        if ctrl.dt is None or ctrl.dt <= 0:
            raise ValueError("sdirk2 needs a positive dt")
        snaps_u, stats, t_pinch, _ = _sdirk2(
            system, u0, t0, t1, times, ctrl, lambda u: positive and np.min(u) <= ctrl.r_min
        )
        snaps_t = times[: len(snaps_u)]
        if t_pinch is not None:
            status = "pinched"
            stats["pinch_time"] = float(t_pinch)
    else:
        raise ValueError(f"unknown method {ctrl.method!r}")

    values = np.array([system.full(u, t) for t, u in zip(snaps_t, snaps_u)])
    stats["max_residual"] = _bc_residual(system, snaps_t, values)
    stats["method"] = ctrl.method
    tr = FlowTrajectory(gauge, n, system.grid.copy(), np.asarray(snaps_t, dtype=float), values, bc.describe(), order, stats, status)
    if status == "pinched" and ctrl.raise_on_pinch:
        raise PinchError(f"radius reached r_min = {ctrl.r_min:g}", tr)
    return tr


def _bc_residual(system, times, values):
    """Mismatch between stored boundary values and the boundary condition."""
    worst = 0.0
    for t, U in zip(times, values):
        u = U[system.free_idx]
        worst = max(worst, float(np.max(np.abs(system.full(u, t) - U))))
    return worst


def evolve_radial(p0: RadialProfile, t0, t1, bc: BoundaryCondition, dt_ctrl: StepControl | None = None) -> FlowTrajectory:
    """r_t = r_zz/(1+r_z^2) - (n-1)/r on the grid of ``p0``."""
    if t1 > 0:
        raise ValueError("radial flow runs on t <= 0")
    return _evolve("radial", p0.n, p0.z, p0.r, t0, t1, bc, dt_ctrl, p0.order)


def evolve_graph(p0: GraphProfile, t0, t1, bc: BoundaryCondition, dt_ctrl: StepControl | None = None) -> FlowTrajectory:
    """f_t = f_rr/(1+f_r^2) + (n-1) f_r/r; the tip r = 0 uses the even extension."""
    return _evolve("graph", p0.n, p0.r, p0.f, t0, t1, bc, dt_ctrl, p0.order, has_tip=p0.has_tip)


def evolve_rescaled(p0: RadialProfile, tau0, tau1, bc: BoundaryCondition, dt_ctrl: StepControl | None = None) -> FlowTrajectory:
    """rho_tau = rho_zz/(1+rho_z^2) - (n-1)/rho + (rho - z rho_z)/2."""
    return _evolve("rescaled", p0.n, p0.z, p0.r, tau0, tau1, bc, dt_ctrl, p0.order)


def rhs_of(tr: FlowTrajectory, i):
    """Spatial right-hand side (the time derivative implied by the PDE) at snapshot i."""
    p = tr.profile(i)
    if tr.gauge == "graph":
        D1, D2, _ = (even_diff_matrices if p.has_tip else diff_matrices)(tr.grid, tr.order)
    else:
        D1, D2, _ = diff_matrices(tr.grid, tr.order)
    U = tr.values[i]
    u_z, u_zz = D1 @ U, D2 @ U
    w = 1.0 + u_z**2
    if tr.gauge == "graph":
        with np.errstate(divide="ignore", invalid="ignore"):
            rot = (tr.n - 1) * u_z / tr.grid
        if p.has_tip:
            rot[0] = (tr.n - 1) * u_zz[0]
        return u_zz / w + rot
    F = u_zz / w - (tr.n - 1) / U
    if tr.gauge == "rescaled":
        F = F + 0.5 * (U - tr.grid * u_z)
    return F


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def h_max_series(tr: FlowTrajectory):
    """(t, sup H over interior nodes) per snapshot."""
    if tr.gauge not in ("radial", "graph"):
        raise ValueError("H_max is defined for the radial and graph gauges")
    out = []
    for t, p in tr.snapshots:
        rep = curvature_of_radial(p) if tr.gauge == "radial" else curvature_of_graph(p)
        inner = ~rep.boundary
        if tr.gauge == "graph" and p.has_tip:
            inner[0] = True
        out.append((t, float(np.max(rep.H[inner]))))
    return out


@dataclass(frozen=True)
class VanishingTimeTable:
    z: np.ndarray
    T: np.ndarray
    method: str
    n: int
    fit_window: tuple

    def sandwich(self, tr: FlowTrajectory, C1, C2, r_floor=None):
        """Check 2(n-1)[T-t] <= r^2 <= 2(n-1)[T-t] + 8 C2 [T-t]^{1/4} + C1^2.

        Samples with r < ``r_floor`` (default C1) are skipped. Returns a dict with
        the lower and upper margins and the smallest C2 that makes every sample pass.
        """
        r_floor = C1 if r_floor is None else r_floor
        idx = np.searchsorted(tr.grid, self.z)
        lower, upper, need = [], [], []
        for j, T in zip(idx, self.T):
            r = tr.values[:, j]
            sel = r >= r_floor
            s = T - tr.times[sel]
            base = 2 * (tr.n - 1) * s
            r2 = r[sel] ** 2
            lower.extend(r2 - base)
            upper.extend(base + 8 * C2 * s**0.25 + C1**2 - r2)
            with np.errstate(divide="ignore", invalid="ignore"):
                need.extend(np.where(s > 0, (r2 - base - C1**2) / (8 * s**0.25), np.inf))
        lower, upper = np.asarray(lower), np.asarray(upper)
        c2_min = float(max(0.0, np.max(need))) if len(need) else float("nan")
        return {
            "samples": int(len(lower)),
            "lower_margin": float(np.min(lower)) if len(lower) else float("nan"),
            "upper_margin": float(np.min(upper)) if len(upper) else float("nan"),
            "holds": bool(len(lower) and np.min(lower) >= 0 and np.min(upper) >= 0),
            "C2_min": c2_min,
        }


def vanishing_time(tr: FlowTrajectory, z=None, method="linear-fit", window=0.3) -> VanishingTimeTable:
    """Estimate T(z), the time at which r(z, .) reaches zero.

    'linear-fit' fits r^2 against t over the trailing ``window`` fraction of the
    snapshots; 'cylinder-law' continues the last snapshot with the
    z-independent law d(r^2)/dt = -2(n-1).
    """
    if tr.gauge != "radial":
        raise ValueError("vanishing_time needs a radial trajectory")
    if len(tr) < 3:
        raise FlowError("insufficient trajectory length")
    z = tr.grid if z is None else np.asarray(z, dtype=float)
    idx = np.searchsorted(tr.grid, z)
    if np.any(idx >= len(tr.grid)) or np.any(np.abs(tr.grid[np.clip(idx, 0, len(tr.grid) - 1)] - z) > 1e-12 * (1 + np.abs(z))):
        raise ValueError("vanishing times are estimated at grid nodes")
    k0 = min(len(tr) - 3, int(np.floor((1 - window) * len(tr))))
    ts = tr.times[k0:]
    T = np.empty(len(z))
    for m, j in enumerate(idx):
        r2 = tr.values[k0:, j] ** 2
        if method == "linear-fit":
            slope, icpt = np.polyfit(ts, r2, 1)
            if slope >= 0:
                raise FlowError(f"r^2 not decreasing at z = {z[m]:g}")
            T[m] = -icpt / slope
        elif method == "cylinder-law":
            T[m] = tr.times[-1] + tr.values[-1, j] ** 2 / (2 * (tr.n - 1))
        else:
            raise ValueError(f"unknown method {method!r}")
    return VanishingTimeTable(z, T, method, tr.n, (float(ts[0]), float(ts[-1])))


@dataclass(frozen=True)
class EnclosureReport:
    margin: float
    z_at_min: float
    points: int

    @property
    def enclosed(self):
        return self.margin >= 0


def enclosure_check(inner: RadialProfile, outer: RadialProfile, overlap=None) -> EnclosureReport:
    """min over the shared axial range of (outer radius - inner radius)."""
    lo = max(inner.z[0], outer.z[0])
    hi = min(inner.z[-1], outer.z[-1])
    if overlap is not None:
        lo, hi = max(lo, overlap[0]), min(hi, overlap[1])
    if hi < lo:
        raise ValueError("empty overlap")
    zs = np.union1d(inner.z[(inner.z >= lo) & (inner.z <= hi)], outer.z[(outer.z >= lo) & (outer.z <= hi)])
    if len(zs) == 0:
        zs = np.array([lo])
    r_in = PchipInterpolator(inner.z, inner.r)(zs)
    r_out = PchipInterpolator(outer.z, outer.r)(zs)
    gap = r_out - r_in
    k = int(np.argmin(gap))
    return EnclosureReport(float(gap[k]), float(zs[k]), int(len(zs)))


@dataclass(frozen=True)
class MonotoneSeries:
    which: str
    times: np.ndarray
    values: np.ndarray
    diffs: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def max_increase(self):
        return float(np.max(self.diffs)) if self.diffs.size else 0.0

    @property
    def min_diff(self):
        return float(np.min(self.diffs)) if self.diffs.size else 0.0


def sphere_area(n):
    """|S^{n-1}|."""
    return 2 * np.pi ** (n / 2) / gamma(n / 2)


def _simpson_weights(x):
    from scipy.integrate import simpson

    w = np.empty(len(x))
    e = np.zeros(len(x))
    for i in range(len(x)):
        e[i] = 1.0
        w[i] = simpson(e, x=x)
        e[i] = 0.0
    return w


def gaussian_area_of(p: RadialProfile, weights=None):
    """Gaussian area of the rotation hypersurface of rho(z) over the grid range."""
    D1, _, _ = diff_matrices(p.z, p.order)
    rz = D1 @ p.r
    w = _simpson_weights(p.z) if weights is None else weights
    integrand = sphere_area(p.n) * p.r ** (p.n - 1) * np.sqrt(1 + rz**2) * np.exp(-(p.z**2 + p.r**2) / 4)
    return float(w @ integrand)


def cylinder_tail(n, Z):
    """Gaussian area of the exact cylinder outside |z| <= Z."""
    R2 = 2.0 * (n - 1)
    return float(sphere_area(n) * R2 ** ((n - 1) / 2) * np.exp(-R2 / 4) * 2 * np.sqrt(np.pi) * erfc(Z / 2))


def monotone_quantity_series(tr: FlowTrajectory, which) -> MonotoneSeries:
    if which == "gaussian_area":
        if tr.gauge != "rescaled":
            raise ValueError("Gaussian area is tracked along rescaled trajectories")
        w = _simpson_weights(tr.grid)
        vals = np.array([gaussian_area_of(tr.profile(i), w) for i in range(len(tr))])
        Z = min(-tr.grid[0], tr.grid[-1])
        return MonotoneSeries(which, tr.times, vals, np.diff(vals), {"tail_correction": cylinder_tail(tr.n, Z)})
    if which == "rr_z_profile":
        if tr.gauge != "radial":
            raise ValueError("rr_z needs the radial gauge")
        D1, _, flags = diff_matrices(tr.grid, tr.order)
        vals = np.array([U * (D1 @ U) for U in tr.values])
        return MonotoneSeries(which, tr.times, vals, np.diff(vals, axis=0), {"boundary": flags})
    if which == "f_t_profile":
        if tr.gauge != "graph":
            raise ValueError("f_t needs the graph gauge")
        ft = np.array([rhs_of(tr, i) for i in range(len(tr))])
        D1 = (even_diff_matrices if tr.grid[0] == 0 else diff_matrices)(tr.grid, tr.order)[0]
        f_tr = np.array([D1 @ row for row in ft])
        f_tt = np.diff(ft, axis=0) / np.diff(tr.times)[:, None]
        return MonotoneSeries(which, tr.times, ft, np.diff(ft, axis=0), {"f_tr": f_tr, "f_tt": f_tt})
    raise ValueError(f"unknown quantity {which!r}")
