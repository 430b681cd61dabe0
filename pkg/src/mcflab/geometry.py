"""Axially symmetric hypersurfaces in R^{n+1} and their curvatures.

Two graph gauges are supported:

* ``RadialProfile``: the radius r(z) as a function of the axial coordinate.
* ``GraphProfile``: the height f(r) as a function of the radius.

The unit normal is the one for which convex surfaces have H > 0.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.sparse import csr_matrix

RADIAL_SCHEMA = "mcflab.radial/1"
GRAPH_SCHEMA = "mcflab.graph/1"


class ProfileError(ValueError):
    """Raised when a profile violates its type invariants."""


class GaugeError(ValueError):
    """Raised when a gauge conversion is undefined (non-monotone input)."""


def check_dimension(n, allow_n2=False):
    n = int(n)
    if n >= 3 or (allow_n2 and n == 2):
        return n
    raise ProfileError(f"dimension n={n} not supported (need n >= 3)")


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def fornberg_weights(x0, x, m):
    """Weights for derivatives 0..m at ``x0`` from nodes ``x`` (Fornberg 1988)."""
    x = np.asarray(x, dtype=float)
    npts = len(x)
    c = np.zeros((npts, m + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def diff_matrices(x, order=2):
    """Sparse first and second derivative matrices on the grid ``x``.

    Interior rows use centred stencils of ``order + 1`` points; rows whose
    centred stencil would leave the grid use the nearest one-sided window of
    ``order + 2`` points so the second derivative keeps the nominal order.
    Returns ``(D1, D2, boundary_mask)``.
    """
    x = np.asarray(x, dtype=float)
    npts = len(x)
    if order not in (2, 4, 6):
        raise ValueError("stencil order must be 2, 4 or 6")
    half = order // 2
    if npts < order + 2:
        raise ProfileError(f"grid too short for order-{order} stencils ({npts} nodes)")
    rows, cols, v1, v2 = [], [], [], []
    flagged = np.zeros(npts, dtype=bool)
    for i in range(npts):
        if half <= i < npts - half:
            idx = np.arange(i - half, i + half + 1)
        else:
            flagged[i] = True
            width = order + 2
            lo = 0 if i < half else npts - width
            idx = np.arange(lo, lo + width)
        w = fornberg_weights(x[i], x[idx], 2)
        rows.extend([i] * len(idx))
        cols.extend(idx)
        v1.extend(w[:, 1])
        v2.extend(w[:, 2])
    shape = (npts, npts)
    D1 = csr_matrix((v1, (rows, cols)), shape=shape)
    D2 = csr_matrix((v2, (rows, cols)), shape=shape)
    return D1, D2, flagged


def even_diff_matrices(r, order=2):
    """Derivative matrices for data on ``r >= 0`` with r[0] = 0, extended evenly.

    Values at -r[k] are mirrored from r[k], which forces f_r(0) = 0.
    """
    r = np.asarray(r, dtype=float)
    if r[0] != 0.0:
        raise ProfileError("even extension needs r[0] == 0")
    npts = len(r)
    half = order // 2
    ext = np.concatenate([-r[half:0:-1], r])
    D1e, D2e, flag_e = diff_matrices(ext, order)
    # fold: column k of the extended grid maps to |index|
    fold = np.concatenate([np.arange(half, 0, -1), np.arange(npts)])
    E = csr_matrix((np.ones(len(ext)), (np.arange(len(ext)), fold)), shape=(len(ext), npts))
    D1 = (D1e @ E)[half:, :].tocsr()
    D2 = (D2e @ E)[half:, :].tocsr()
    return D1, D2, flag_e[half:]


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """Radius as a graph over the axis: the surface {|x'| = r(z), x_{n+1} = z}."""

    n: int
    z: np.ndarray
    r: np.ndarray
    order: int = 2
    allow_n2: bool = field(default=False, repr=False)

    def __post_init__(self):
        check_dimension(self.n, self.allow_n2)
        z = np.asarray(self.z, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if z.ndim != 1 or z.shape != r.shape:
            raise ProfileError("z and r must be 1-D arrays of equal length")
        if len(z) < 5:
            raise ProfileError("profile needs at least 5 nodes")
        if np.any(np.diff(z) <= 0):
            raise ProfileError("z grid must be strictly increasing")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ProfileError("radii must be finite and positive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "r", r)

    def derivatives(self):
        D1, D2, flags = diff_matrices(self.z, self.order)
        return D1 @ self.r, D2 @ self.r, flags

    def with_values(self, r):
        return RadialProfile(self.n, self.z, r, self.order, self.allow_n2)

    def to_csv(self):
        return _write_csv(RADIAL_SCHEMA, ("z", "r"), self.z, self.r)

    def to_json(self):
        return _profile_json(RADIAL_SCHEMA, self.n, self.order, self.z, self.r)

    @classmethod
    def from_csv(cls, text, n, order=2):
        a, b = _read_csv(text, RADIAL_SCHEMA)
        return cls(n, a, b, order)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("schema") != RADIAL_SCHEMA:
            raise ProfileError(f"unexpected schema {d.get('schema')!r}")
        return cls(d["n"], np.array(d["grid"]), np.array(d["values"]), d["order"])


@dataclass(frozen=True)
class GraphProfile:
    """Height as a graph over the radius: the surface {x_{n+1} = f(|x'|)}.

    When ``r[0] == 0`` the grid contains the tip and derivatives use the even
    extension f(-r) = f(r).
    """

    n: int
    r: np.ndarray
    f: np.ndarray
    order: int = 2
    allow_n2: bool = field(default=False, repr=False)

    def __post_init__(self):
        check_dimension(self.n, self.allow_n2)
        r = np.asarray(self.r, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if r.ndim != 1 or r.shape != f.shape:
            raise ProfileError("r and f must be 1-D arrays of equal length")
        if len(r) < 5:
            raise ProfileError("profile needs at least 5 nodes")
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise ProfileError("r grid must be increasing and non-negative")
        if not np.all(np.isfinite(f)):
            raise ProfileError("heights must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "f", f)

    @property
    def has_tip(self):
        return self.r[0] == 0.0

    def derivatives(self):
        if self.has_tip:
            D1, D2, flags = even_diff_matrices(self.r, self.order)
        else:
            D1, D2, flags = diff_matrices(self.r, self.order)
        return D1 @ self.f, D2 @ self.f, flags

    def with_values(self, f):
        return GraphProfile(self.n, self.r, f, self.order, self.allow_n2)

    def to_csv(self):
        return _write_csv(GRAPH_SCHEMA, ("r", "f"), self.r, self.f)

    def to_json(self):
        return _profile_json(GRAPH_SCHEMA, self.n, self.order, self.r, self.f)

    @classmethod
    def from_csv(cls, text, n, order=2):
        a, b = _read_csv(text, GRAPH_SCHEMA)
        return cls(n, a, b, order)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("schema") != GRAPH_SCHEMA:
            raise ProfileError(f"unexpected schema {d.get('schema')!r}")
        return cls(d["n"], np.array(d["grid"]), np.array(d["values"]), d["order"])


@dataclass(frozen=True)
class CurvatureReport:
    H: np.ndarray
    A_norm_sq: np.ndarray
    k_axial: np.ndarray
    k_rot: np.ndarray
    boundary: np.ndarray

    @property
    def principal_curvatures(self):
        return np.stack([self.k_axial, self.k_rot], axis=-1)


def _write_csv(schema, names, a, b):
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for x, y in zip(a, b):
        w.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()


def _read_csv(text, schema):
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# schema: {schema}":
        raise ProfileError(f"missing schema header {schema!r}")
    rows = list(csv.reader(lines[2:]))
    data = np.array([[float(x) for x in row] for row in rows if row])
    return data[:, 0], data[:, 1]


def _profile_json(schema, n, order, grid, values):
    return json.dumps(
        {"schema": schema, "n": n, "order": order, "grid": grid.tolist(), "values": values.tolist()},
        sort_keys=True,
    )


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


def curvature_of_radial(p: RadialProfile) -> CurvatureReport:
    r_z, r_zz, flags = p.derivatives()
    w = 1.0 + r_z**2
    k_axial = -r_zz / w**1.5
    k_rot = 1.0 / (p.r * np.sqrt(w))
    H = k_axial + (p.n - 1) * k_rot
    A2 = k_axial**2 + (p.n - 1) * k_rot**2
    return CurvatureReport(H, A2, k_axial, k_rot, flags)


def curvature_of_graph(p: GraphProfile, tip_tol=1e-3) -> CurvatureReport:
    """Curvatures of a height graph; at r = 0 the rotational curvature is f_rr(0)."""
    if p.has_tip:
        # one-sided slope at the tip: must vanish for a smooth cap
        w = fornberg_weights(0.0, p.r[: p.order + 1], 1)[:, 1]
        slope = float(w @ p.f[: p.order + 1])
        if abs(slope) > tip_tol:
            raise ProfileError(f"tip not smooth: one-sided f_r(0) = {slope:.3g}")
    f_r, f_rr, flags = p.derivatives()
    w = 1.0 + f_r**2
    k_axial = f_rr / w**1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        k_rot = f_r / (p.r * np.sqrt(w))
    if p.has_tip:
        k_rot[0] = f_rr[0]
    H = k_axial + (p.n - 1) * k_rot
    A2 = k_axial**2 + (p.n - 1) * k_rot**2
    return CurvatureReport(H, A2, k_axial, k_rot, flags)


def graph_speed(p: GraphProfile):
    """Vertical speed f_t = f_rr/(1+f_r^2) + (n-1) f_r / r of the graph under MCF."""
    f_r, f_rr, _ = p.derivatives()
    with np.errstate(divide="ignore", invalid="ignore"):
        rot = (p.n - 1) * f_r / p.r
    if p.has_tip:
        rot[0] = (p.n - 1) * f_rr[0]
    return f_rr / (1.0 + f_r**2) + rot


def radial_speed(p: RadialProfile):
    """r_t = r_zz/(1+r_z^2) - (n-1)/r."""
    r_z, r_zz, _ = p.derivatives()
    return r_zz / (1.0 + r_z**2) - (p.n - 1) / p.r


# ---------------------------------------------------------------------------
# gauge conversion
# ---------------------------------------------------------------------------


def radial_to_graph(p: RadialProfile, r_grid=None) -> GraphProfile:
    """Invert r(z) into f(r). Without ``r_grid`` the nodes are swapped exactly."""
    if np.any(np.diff(p.r) <= 0):
        raise GaugeError("r(z) is not strictly increasing; f(r) undefined")
    if r_grid is None:
        return GraphProfile(p.n, p.r.copy(), p.z.copy(), p.order, p.allow_n2)
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid[0] < p.r[0] or r_grid[-1] > p.r[-1]:
        raise GaugeError("requested r grid leaves the range of the profile")
    f = PchipInterpolator(p.r, p.z)(r_grid)
    return GraphProfile(p.n, r_grid, f, p.order, p.allow_n2)


def graph_to_radial(p: GraphProfile, z_grid=None) -> RadialProfile:
    """Invert f(r) into r(z); the tip node r = 0 is dropped (radii must be positive)."""
    keep = p.r > 0
    r, f = p.r[keep], p.f[keep]
    if np.any(np.diff(f) <= 0) or (p.has_tip and f[0] <= p.f[0]):
        raise GaugeError("f(r) is not strictly increasing; r(z) undefined")
    if z_grid is None:
        return RadialProfile(p.n, f.copy(), r.copy(), p.order, p.allow_n2)
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid[0] < f[0] or z_grid[-1] > f[-1]:
        raise GaugeError("requested z grid leaves the range of the profile")
    return RadialProfile(p.n, z_grid, PchipInterpolator(f, r)(z_grid), p.order, p.allow_n2)


def convert_gauge(p, grid=None):
    if isinstance(p, RadialProfile):
        return radial_to_graph(p, grid)
    if isinstance(p, GraphProfile):
        return graph_to_radial(p, grid)
    raise TypeError(f"cannot convert {type(p).__name__}")


@dataclass(frozen=True)
class ConvexityFlags:
    r_positive: bool
    r_z_positive: bool
    r_t_negative: bool
    r_zz_negative: bool

    @property
    def all(self):
        return self.r_positive and self.r_z_positive and self.r_t_negative and self.r_zz_negative


def convexity_flags(p: RadialProfile, mask=None) -> ConvexityFlags:
    """Sign conditions r > 0, r_z > 0, r_t < 0, r_zz < 0 on interior nodes."""
    r_z, r_zz, flags = p.derivatives()
    r_t = r_zz / (1.0 + r_z**2) - (p.n - 1) / p.r
    sel = ~flags if mask is None else (~flags & mask)
    return ConvexityFlags(
        bool(np.all(p.r[sel] > 0)),
        bool(np.all(r_z[sel] > 0)),
        bool(np.all(r_t[sel] < 0)),
        bool(np.all(r_zz[sel] < 0)),
    )
