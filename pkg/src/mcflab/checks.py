"""Inequality checks that tie trajectories to the asymptotic estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfc

from .flow import FlowTrajectory, monotone_quantity_series
from .geometry import diff_matrices


@dataclass(frozen=True)
class Check:
    """One pass/fail line of a manifest.

    ``relation`` is '<=', '>=', 'in' (bound = (lo, hi)) or 'is' (exact match).
    The margin is positive when the check passes with room to spare.
    """

    name: str
    value: object
    bound: object
    relation: str
    note: str = ""

    @property
    def margin(self):
        v, b = self.value, self.bound
        if self.relation == "<=":
            return float(b) - float(v)
        if self.relation == ">=":
            return float(v) - float(b)
        if self.relation == "in":
            return min(float(v) - float(b[0]), float(b[1]) - float(v))
        return None

    @property
    def passed(self):
        if self.relation == "is":
            return self.value == self.bound
        m = self.margin
        return bool(m is not None and np.isfinite(m) and m >= 0)

    def as_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "bound": list(self.bound) if isinstance(self.bound, tuple) else self.bound,
            "relation": self.relation,
            "margin": self.margin,
            "passed": self.passed,
            "note": self.note,
        }


# ---------------------------------------------------------------------------
# rr_z
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RrzReport:
    limit: float
    upper_bound: float
    lower_bound: float
    far_value: float
    far_rel_error: float
    sup: float
    inf: float
    neck_nodes: int
    degenerate: bool

    @property
    def upper_margin(self):
        return self.upper_bound - self.sup

    @property
    def lower_margin(self):
        return self.inf - self.lower_bound


def rr_z_field(tr: FlowTrajectory):
    """rr_z at every node, one row per snapshot."""
    if tr.gauge != "radial":
        raise ValueError("rr_z needs the radial gauge")
    return monotone_quantity_series(tr, "rr_z_profile").values


def check_rr_z_limits(tr: FlowTrajectory, c_ref, delta=0.05, eps0=0.04) -> RrzReport:
    """Compare rr_z on the neck region with (n-1)/c_ref.

    The neck region is the set of interior nodes with |r_z| <= eps0 and
    r|r_zz| <= eps0. The far value is rr_z at the largest interior z; its
    relative error is the worst over all snapshots.
    """
    rrz = rr_z_field(tr)
    D1, D2, flags = diff_matrices(tr.grid, tr.order)
    mask = np.zeros_like(rrz, dtype=bool)
    for i, U in enumerate(tr.values):
        mask[i] = (np.abs(D1 @ U) <= eps0) & (U * np.abs(D2 @ U) <= eps0)
    mask[:, 0] = mask[:, -1] = False
    limit = (tr.n - 1) / c_ref
    upper = (1 + 2 * eps0) * limit
    lower = (tr.n - 1) * (1 / c_ref - 2 * delta)
    if np.max(np.abs(rrz[:, 1:-1])) < 1e-12 or not mask.any():
        # shrinking cylinder (rr_z = 0) or no resolved neck: flagged, not failed
        return RrzReport(limit, upper, lower, 0.0, float("nan"), float("nan"), float("nan"), int(mask.sum()), True)
    far = rrz[:, -2]
    sel = rrz[mask]
    return RrzReport(
        limit, upper, lower, float(far[-1]), float(np.max(np.abs(far - limit)) / limit),
        float(sel.max()), float(sel.min()), int(mask.sum()), False,
    )


# ---------------------------------------------------------------------------
# half-line barrier
# ---------------------------------------------------------------------------


def half_line_heat(z, t, profile="erfc"):
    """Heat solution on z >= 0.

    'erfc': boundary value 1 at z = 0 and zero initial data.
    'erf':  boundary value 0 at z = 0 and initial data 1.
    """
    z = np.asarray(z, dtype=float)
    if t <= 0:
        raise ValueError("half-line heat solution needs t > 0")
    x = z / (2 * np.sqrt(t))
    if profile == "erfc":
        return erfc(x)
    if profile == "erf":
        return erf(x)
    raise ValueError(f"unknown profile {profile!r}")


def barrier_psi(n, c_ref, delta, z, t, s, profile="erfc"):
    return (n - 1) * (1 / c_ref - 2 * delta - half_line_heat(2 * np.asarray(z), t - s, profile) / c_ref)


@dataclass(frozen=True)
class BarrierReport:
    margin: float
    z_at_min: float
    t_at_min: float
    samples: int
    profile: str

    @property
    def holds(self):
        return self.margin > 0


def check_half_line_barrier(tr: FlowTrajectory, delta, s, c_ref=1.0, z0=None, profile="erfc") -> BarrierReport:
    """Verify rr_z > psi^{delta,s}(z - z0, t) at every sampled node with t > s.

    ``z0`` (default: the left end of the grid) is the origin of the half line.
    """
    if not s < tr.times[0]:
        raise ValueError("the trajectory must start after s")
    rrz = rr_z_field(tr)
    z0 = tr.grid[0] if z0 is None else z0
    zz = tr.grid - z0
    keep = zz >= 0
    best = (np.inf, np.nan, np.nan)
    for i, t in enumerate(tr.times):
        gap = rrz[i, keep] - barrier_psi(tr.n, c_ref, delta, zz[keep], t, s, profile)
        k = int(np.argmin(gap))
        if gap[k] < best[0]:
            best = (float(gap[k]), float(tr.grid[keep][k]), float(t))
    return BarrierReport(best[0], best[1], best[2], int(keep.sum() * len(tr)), profile)


# ---------------------------------------------------------------------------
# tip speed and Harnack signs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TipSpeedReport:
    applicable: bool
    flags: tuple = ()
    H_est: float = float("nan")
    min_ft_gap: float = float("nan")
    min_ftt: float = float("nan")
    min_ftr: float = float("nan")
    tip_slope: float = float("nan")
    near_tip_sup: np.ndarray = field(default_factory=lambda: np.zeros(0))


def check_tip_speed(tr: FlowTrajectory, noncompact=True, burn_in=0.0, r0=1.0) -> TipSpeedReport:
    """Harnack-type signs along a graph trajectory with a tip at r = 0.

    H_est is the smallest sampled tip speed, the finite-window stand-in for the
    limit of the tip speed as t -> -infinity (the tip speed is nondecreasing
    when f_tt >= 0). Nodes at the outer boundary are excluded, as are snapshots
    with t < t0 + burn_in. f_tt uses differences of f_t between snapshots.
    """
    flags = []
    if tr.gauge != "graph":
        flags.append("gauge")
    elif tr.grid[0] != 0:
        flags.append("no-tip")
    if not noncompact:
        flags.append("compact")
    if flags:
        return TipSpeedReport(False, tuple(flags))
    ms = monotone_quantity_series(tr, "f_t_profile")
    keep = tr.times >= tr.times[0] + burn_in
    ft = ms.values[keep][:, :-1]
    ftr = ms.extra["f_tr"][keep][:, :-1]
    ftt = ms.extra["f_tt"][keep[:-1]][:, :-1]
    H_est = float(np.min(ft[:, 0]))
    tip = tr.values[keep, 0]
    slope = float(np.polyfit(tr.times[keep], tip, 1)[0])
    near = tr.grid[:-1] <= r0
    return TipSpeedReport(
        True, (), H_est, float(np.min(ft - H_est)), float(np.min(ftt)), float(np.min(ftr)), slope,
        np.max(ft[:, near], axis=1),
    )
