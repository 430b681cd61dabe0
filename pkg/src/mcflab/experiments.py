"""Experiment registry and orchestration: one experiment id per acceptance check."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import __version__
from .checks import Check, check_half_line_barrier, check_rr_z_limits, check_tip_speed
from .config import ExperimentConfig
from .exact import (
    cylinder_radius, shrinker_barrier_at, solve_bowl, solve_shrinker, sphere_radius,
)
from .flow import (
    BoundaryCondition, EndCondition, StepControl, VanishingTimeTable, enclosure_check,
    evolve_graph, evolve_radial, evolve_rescaled, monotone_quantity_series, vanishing_time,
)
from .geometry import GraphProfile, RadialProfile
from .harmonics import mode_table
from .io import atomic_write, csv_text, dumps
from .neck import (
    neck_improvement_experiment, rescaling_exponent, scaling_exponent, solve_linearized_neck,
)
from .spectral import (
    CylinderField, ModeIndex, cylinder_gaussian_area, eigenvalue, hermite_norm_sq, merle_zaag_classify,
    project_samples, psi, rayleigh_quotient, sphere_volume, split,
)

MANIFEST_SCHEMA = "mcflab.manifest/1"


class UnknownExperimentError(KeyError):
    pass


class ExperimentFailure(RuntimeError):
    """A solver failed inside an experiment; partial outputs stay on disk next to a FAILED marker."""


@dataclass
class RunManifest:
    experiment: str
    config: dict
    version: str
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)
    status: str = "ok"
    wall_seconds: float | None = None

    @property
    def passed(self):
        return self.status == "ok" and all(c["passed"] for c in self.checks)

    def as_dict(self):
        return {
            "schema": MANIFEST_SCHEMA,
            "experiment": self.experiment,
            "config": self.config,
            "version": self.version,
            "checks": self.checks,
            "files": sorted(self.files),
            "status": self.status,
            "passed": self.passed,
            "wall_seconds": self.wall_seconds,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != MANIFEST_SCHEMA:
            raise ValueError("not a run manifest")
        return cls(d["experiment"], d["config"], d["version"], list(d["checks"]), list(d["files"]), d["status"],
                   d.get("wall_seconds"))


class _Outputs:
    def __init__(self, root):
        self.root = root
        self.files = []

    def text(self, name, text):
        atomic_write(os.path.join(self.root, name), text)
        self.files.append(name)

    def csv(self, name, schema, columns, rows):
        self.text(name, csv_text(schema, columns, rows))

    def json(self, name, obj):
        self.text(name, dumps(obj))


def _ctrl(cfg, **kw):
    return StepControl(rtol=cfg.rtol, atol=cfg.atol, r_min=cfg.r_min, **kw)


# ---------------------------------------------------------------------------
# 1. exact-solution oracles
# ---------------------------------------------------------------------------


def _cylinder_oracle(cfg, out):
    n = cfg.n
    z = np.linspace(-10.0, 10.0, cfg.grid)
    ref = lambda t: cylinder_radius(n, t)  # noqa: E731
    p = RadialProfile(n, z, np.full(len(z), ref(cfg.t0)), cfg.order)
    tr = evolve_radial(p, cfg.t0, cfg.t1, BoundaryCondition.reference(ref, ref), _ctrl(cfg))
    cyl_err = max(float(np.max(np.abs(row - ref(t)))) for t, row in zip(tr.times, tr.values))
    out.text("cylinder.csv", tr.to_csv())

    # lower half of the sphere of radius R(t), as a graph over the unit disk
    R = lambda t: sphere_radius(n, 1.0, t)  # noqa: E731
    r = np.linspace(0.0, 1.0, 101)
    g = GraphProfile(n, r, -np.sqrt(R(-1.0) ** 2 - r**2), cfg.order)
    bc = BoundaryCondition.tip(EndCondition("reference", lambda t: -np.sqrt(R(t) ** 2 - 1.0)))
    tr_s = evolve_graph(g, -1.0, -0.25, bc, _ctrl(cfg))
    sph_err = max(float(np.max(np.abs(row + np.sqrt(R(t) ** 2 - r**2)))) for t, row in zip(tr_s.times, tr_s.values))
    out.text("sphere.csv", tr_s.to_csv())
    return [
        Check("cylinder_max_error", cyl_err, 1e-6, "<="),
        Check("sphere_max_error", sph_err, 1e-5, "<="),
    ]


# ---------------------------------------------------------------------------
# 2. bowl soliton
# ---------------------------------------------------------------------------


def _bowl_translation(cfg, out):
    b = solve_bowl(cfg.n, 1.0, 100.0, tol=cfg.ode_tol)
    small = solve_bowl(cfg.n, 1.0, 20.0, tol=cfg.ode_tol, num=401)
    fR = small.profile.f[-1]
    bc = BoundaryCondition.tip(EndCondition("reference", lambda t: fR + t))
    tr = evolve_graph(small.profile, 0.0, 1.0, bc, _ctrl(cfg))
    err = max(float(np.max(np.abs(row - small.profile.f - t))) for t, row in zip(tr.times, tr.values))
    out.csv("bowl.csv", "mcflab.graph/1", ["r", "f", "f_r"], zip(b.profile.r, b.profile.f, b.slope))
    out.text("bowl_translation.csv", tr.to_csv())
    target = 1.0 / (cfg.n - 1)
    return [
        Check("bowl_residual", b.residual, 1e-6, "<="),
        Check("slope_ratio_at_100", b.slope_ratio_at_rmax, (0.99 * target, 1.01 * target), "in"),
        Check("translation_error", err, 1e-4, "<="),
    ]


# ---------------------------------------------------------------------------
# 3. rr_z asymptotics
# ---------------------------------------------------------------------------


def _rr_z_asymptotics(cfg, out):
    n = cfg.n
    b = solve_bowl(n, 1.0, 120.0, tol=cfg.ode_tol)
    # neck region of the bowl: r >= 50 keeps |r_z| <= 2/r below eps0 = 0.04
    za, zb = b.height(50.0), b.height(100.0)
    z = np.linspace(za, zb, 401)
    p0 = RadialProfile(n, z, b.radius_at_height(z + 1.0), cfg.order)
    bc = BoundaryCondition.reference(lambda t: b.radius_at_height(za - t), lambda t: b.radius_at_height(zb - t))
    tr = evolve_radial(p0, -1.0, 0.0, bc, _ctrl(cfg))
    err = max(float(np.max(np.abs(row - b.radius_at_height(z - t)))) for t, row in zip(tr.times, tr.values))
    rep = check_rr_z_limits(tr, 1.0, cfg.delta, cfg.eps0)
    bar = check_half_line_barrier(tr, cfg.delta, s=-1.5, c_ref=1.0, profile=cfg.barrier_profile)
    out.text("bowl_radial.csv", tr.to_csv())
    return [
        Check("radial_translation_error", err, 1e-4, "<="),
        Check("rr_z_far_rel_error", rep.far_rel_error, 0.01, "<="),
        Check("rr_z_sup_neck", rep.sup, rep.upper_bound, "<="),
        Check("rr_z_inf_neck", rep.inf, rep.lower_bound, ">="),
        Check("half_line_barrier_margin", bar.margin, 0.0, ">=", f"profile={bar.profile}"),
    ]


# ---------------------------------------------------------------------------
# 4. spectral table
# ---------------------------------------------------------------------------


def _random_field(rng, n, l_max, d_max, cls):
    f = CylinderField.zeros(n, l_max, d_max)
    c = np.zeros_like(f.coeffs)
    for j, (d, _) in enumerate(f.modes):
        for l in range(l_max + 1):
            ev = eigenvalue(ModeIndex(l, d), n)
            kind = "plus" if ev > 1e-14 else ("zero" if abs(ev) <= 1e-14 else "minus")
            if kind == cls:
                c[l, j] = rng.standard_normal()
    return f.with_coeffs(c)


def _spectral_table(cfg, out):
    n, l_max, d_max = cfg.n, 6, 3
    rows = []
    worst = 0.0
    for l in range(l_max + 1):
        for j, (d, k) in enumerate(mode_table(n, d_max)):
            f = CylinderField.zeros(n, l_max, d_max)
            c = f.coeffs.copy()
            c[l, j] = 1.0
            rq = rayleigh_quotient(f.with_coeffs(c), route="quadrature")
            ev = eigenvalue(ModeIndex(l, d, k), n)
            worst = max(worst, abs(rq - ev))
            rows.append((l, d, k, ev, rq))
    out.csv("eigentable.csv", "mcflab.eigentable/1", ["l", "d", "k", "formula", "rayleigh_quadrature"], rows)
    rng = np.random.default_rng(cfg.seed)
    ext = {}
    for cls in ("plus", "zero", "minus"):
        q = [rayleigh_quotient(_random_field(rng, n, l_max, d_max, cls), route="quadrature") for _ in range(100)]
        ext[cls] = (min(q), max(q))
    out.csv("gap.csv", "mcflab.gap/1", ["class", "min_rq", "max_rq"], [(k, *v) for k, v in ext.items()])
    return [
        Check("max_rayleigh_error", worst, 1e-10, "<="),
        Check("plus_min_rq", ext["plus"][0], 0.5, ">="),
        Check("zero_max_abs_rq", max(abs(ext["zero"][0]), abs(ext["zero"][1])), 1e-12, "<="),
        Check("minus_max_rq", ext["minus"][1], -0.5, "<="),
    ]


# ---------------------------------------------------------------------------
# 5/6. rescaled flow
# ---------------------------------------------------------------------------

RESCALED_Z = 12.0
RESCALED_NODES = 481


def rescaled_perturbation(seed):
    """Axial Hermite coefficients (of psi_l/||psi_l||) of a generic admissible perturbation.

    The constant mode is left out (it is the unstable time-shift direction).
    The growing z mode dominates; the neutral and decaying modes l = 2..4
    carry coefficients at most a tenth in size, as for a solution that is
    close to the cylinder in the backward limit.
    """
    rng = np.random.default_rng(seed)
    a1 = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
    return {1: a1, **{l: rng.uniform(-0.1, 0.1) for l in (2, 3, 4)}}


@lru_cache(maxsize=4)
def _rescaled_run(n, seed, amplitude, rtol, atol, order):
    R = np.sqrt(2.0 * (n - 1))
    coef = rescaled_perturbation(seed)

    def linear(z, tau):
        return R + amplitude * sum(a * np.exp((1 - l / 2) * tau) * psi(l, z) / np.sqrt(hermite_norm_sq(l)) for l, a in coef.items())

    z = np.linspace(-RESCALED_Z, RESCALED_Z, RESCALED_NODES)
    p = RadialProfile(n, z, linear(z, 0.0), order)
    bc = BoundaryCondition.reference(lambda t: linear(-RESCALED_Z, t), lambda t: linear(RESCALED_Z, t))
    tr = evolve_rescaled(p, 0.0, 3.0, bc, StepControl(rtol=rtol, atol=atol, n_snapshots=31))
    series = []
    for tau, row in zip(tr.times, tr.values):
        s = split(project_samples(n, z, row - R, l_max=12, d_max=0))
        series.append((float(tau), s.U_plus, s.U_zero, s.U_minus))
    return tr, np.array(series), coef


def _rescaled_decay(cfg, out):
    tr, series, coef = _rescaled_run(cfg.n, cfg.seed, cfg.amplitude, cfg.rtol, cfg.atol, cfg.order)
    norm = np.sqrt(series[:, 1:].sum(axis=1))
    expo = float(np.polyfit(series[:, 0], np.log(norm), 1)[0])
    mz = merle_zaag_classify(series, cfg.threshold, cfg.window)
    out.csv("spectral_series.csv", "mcflab.spectral_series/1", ["tau", "U_plus", "U_zero", "U_minus"], series)
    out.text("rescaled.csv", tr.to_csv())
    out.json("perturbation.json", {str(k): v for k, v in coef.items()})
    return [
        Check("norm_exponent", expo, (0.4, 0.6), "in"),
        Check("regime", mz.regime, "plus-dominated", "is"),
        Check("trailing_ratio", mz.trailing_ratio, cfg.threshold, "<="),
    ]


def cylinder_area_by_quadrature(n):
    R2 = 2.0 * (n - 1)
    val, _ = quad(lambda z: np.exp(-z * z / 4), -np.inf, np.inf, epsabs=0.0, epsrel=1e-13)
    return sphere_volume(n) * R2 ** ((n - 1) / 2) * np.exp(-R2 / 4) * val


def _gaussian_area(cfg, out):
    tr, _, _ = _rescaled_run(cfg.n, cfg.seed, cfg.amplitude, cfg.rtol, cfg.atol, cfg.order)
    ms = monotone_quantity_series(tr, "gaussian_area")
    closed = cylinder_gaussian_area(cfg.n)
    by_quad = cylinder_area_by_quadrature(cfg.n)
    out.csv("gaussian_area.csv", "mcflab.monotone/1", ["tau", "area"], zip(ms.times, ms.values))
    return [
        Check("max_step_increase", ms.max_increase, 1e-8, "<="),
        Check("max_area", float(ms.values.max()), closed, "<="),
        Check("closed_form_vs_quadrature", abs(closed - by_quad), 1e-10, "<="),
    ]


# ---------------------------------------------------------------------------
# 7. shrinker bounds and enclosure
# ---------------------------------------------------------------------------


def _shrinker_bounds(cfg, out):
    n, K = cfg.n, cfg.K
    R = np.sqrt(2.0 * (n - 1))
    checks = []
    for a in cfg.a_values:
        s = solve_shrinker(n, a, a_min=cfg.a_min)
        # the tip node (u = 0, y = a) meets the lower bound with equality
        body = s.u > 0
        lower = R * np.sqrt(np.clip(1 - (s.y[body] / a) ** 2, 0, None))
        tag = f"a={a:g}"
        out.csv(f"shrinker_a{a:g}.csv", "mcflab.shrinker/1", ["y", "u"], zip(s.y, s.u))
        # outer: perturbed shrinking cylinder on x_{n+1} <= -2 sqrt(-t) over a unit time window
        t1 = -4 * K**2 * a**2
        t0 = t1 - 1.0
        zl = K * a**2 - np.sqrt(-t0) * s.y[-1]
        zb = -2 * np.sqrt(-t1)
        z = np.linspace(zl - 50.0, zb, 401)
        cyl = lambda t: cylinder_radius(n, t)  # noqa: E731
        bump = 0.01 * np.exp(-(((z - (zl + zb) / 2) / (0.2 * (zb - zl))) ** 2))
        p = RadialProfile(n, z, cyl(t0) * (1 + bump), cfg.order)
        tr = evolve_radial(p, t0, t1, BoundaryCondition.reference(cyl, cyl), _ctrl(cfg))
        margin = min(
            enclosure_check(shrinker_barrier_at(s, K, t), prof, overlap=(-np.inf, -2 * np.sqrt(-t))).margin
            for t, prof in tr.snapshots
        )
        checks += [
            Check(f"u_at_2[{tag}]", s.u_at(2.0), R - a**-2, "<="),
            Check(f"lower_bound_gap[{tag}]", float(np.min(s.u[body] - lower)), 0.0, ">="),
            Check(f"ode_residual[{tag}]", s.residual, 1e-8, "<="),
            Check(f"enclosure_margin[{tag}]", margin, 0.0, ">="),
        ]
    return checks


# ---------------------------------------------------------------------------
# 8. linearized neck mode law
# ---------------------------------------------------------------------------


def _neck_mode_law(cfg, out):
    n, d_max, L_box, nz = cfg.n, 2, 40.0, 401
    t0, t1, s = -10.0, -1.0, 1.0
    lam = np.array([d * (d + n - 2) for d, _ in mode_table(n, d_max)], dtype=float)
    kap = rescaling_exponent(n, lam)

    def heat(z, t):
        return np.sqrt(s / (s + t - t0)) * np.exp(-np.asarray(z) ** 2 / (4 * (s + t - t0)))

    def init(z):
        return heat(z, t0)[:, None] * (-t0) ** (-kap)[None, :]

    def bnd(t):
        return heat(np.array([-L_box / 4, L_box / 4]), t)[:, None] * (-t) ** (-kap)[None, :]

    rtol = 1e-9
    sol = solve_linearized_neck(init, t0, t1, L_box, n, d_max, nz, boundary=bnd, rtol=rtol, atol=rtol * 1e-3)
    vh = sol.v_hat()
    exact = heat(sol.z[None, :], sol.times[:, None])
    ones = slice(1, 1 + n)
    err_d1 = float(np.max(np.abs(vh[..., ones] - exact[..., None])))
    rows = [(t, float(np.max(np.abs(vh[i, :, j] - exact[i]))), j) for i, t in enumerate(sol.times) for j in range(len(lam))]
    out.csv("mode_law.csv", "mcflab.mode_law/1", ["t", "kernel_error", "mode"], rows)
    return [
        Check("heat_residual", sol.heat_residual, 10 * rtol, "<="),
        Check("degree1_kernel_error", err_d1, 1e-6, "<="),
    ]


# ---------------------------------------------------------------------------
# 9. neck improvement
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _improvement(seed, L, eps, n, eps1):
    r = neck_improvement_experiment(seed, L, eps, n=n, eps1=eps1)
    return r.eps_in, r.eps_out, r.ratio


def _neck_improvement(cfg, out):
    eps = min(cfg.eps, cfg.eps1)
    rows = []
    for seed in range(cfg.seed, cfg.seed + cfg.seeds):
        rows.append((seed, cfg.L, *_improvement(seed, cfg.L, eps, cfg.n, cfg.eps1)))
    worst = max(r[-1] for r in rows)
    med = []
    for L in cfg.L_sweep:
        ratios = [_improvement(seed, L, eps, cfg.n, cfg.eps1)[2] for seed in range(cfg.seed, cfg.seed + cfg.sweep_seeds)]
        med.append(float(np.median(ratios)))
    expo = scaling_exponent(np.array(cfg.L_sweep), np.array(med))
    out.csv("improvement.csv", "mcflab.improvement/1", ["seed", "L", "eps_in", "eps_out", "ratio"], rows)
    out.csv("sweep_L.csv", "mcflab.sweep_L/1", ["L", "median_ratio"], zip(cfg.L_sweep, med))
    target = -1.0 / (cfg.n - 1)
    return [
        Check("max_ratio", worst, 0.5, "<="),
        Check("scaling_exponent", expo, (target - 0.15, target + 0.15), "in"),
    ]


# ---------------------------------------------------------------------------
# 10. T(z) sandwich
# ---------------------------------------------------------------------------


def _vanishing_time_sandwich(cfg, out):
    n = cfg.n
    b = solve_bowl(n, 1.0, 30.0, tol=cfg.ode_tol)
    z = np.linspace(-40.0, -5.0, 281)
    t0, t1 = -60.0, -50.0
    p = RadialProfile(n, z, b.radius_at_height(z - t0), cfg.order)
    bc = BoundaryCondition.reference(lambda t: b.radius_at_height(-40.0 - t), lambda t: b.radius_at_height(-5.0 - t))
    tr = evolve_radial(p, t0, t1, bc, _ctrl(cfg, n_snapshots=41))
    zs = z[::20]
    fit = vanishing_time(tr, zs, window=cfg.window)
    # the bowl moves up with unit speed and its tip sits at height 0 at t = 0
    exact = VanishingTimeTable(zs, zs.copy(), "exact", n, fit.fit_window)
    sw = exact.sandwich(tr, cfg.C1, cfg.C2)
    sw_fit = fit.sandwich(tr, cfg.C1, cfg.C2)
    slope = float(np.polyfit(zs, fit.T, 1)[0])
    out.csv("vanishing_time.csv", "mcflab.vanishing_time/1", ["z", "T_exact", "T_fit"], zip(zs, exact.T, fit.T))
    return [
        Check("sandwich_lower_margin", sw["lower_margin"], 0.0, ">="),
        Check("sandwich_upper_margin", sw["upper_margin"], 0.0, ">="),
        Check("C2_min", sw["C2_min"], cfg.C2, "<=", "smallest C2 for which every sample passes"),
        Check("fitted_sandwich_lower_margin", sw_fit["lower_margin"], 0.0, ">="),
        Check("fitted_T_slope", slope, (0.98, 1.02), "in"),
    ]


# ---------------------------------------------------------------------------
# 11. Harnack signs
# ---------------------------------------------------------------------------


def harnack_runs(cfg, T=10.0, snapshots=201):
    """Bowl and bowl-plus-bump graph trajectories on r <= 20 with the translating boundary value."""
    b = solve_bowl(cfg.n, 1.0, 20.0, tol=cfg.ode_tol, num=401)
    r, fb = b.profile.r, b.profile.f
    bc = BoundaryCondition.tip(EndCondition("reference", lambda t: fb[-1] + t))
    ctrl = StepControl(rtol=1e-10, atol=1e-12, n_snapshots=snapshots)
    bowl = evolve_graph(b.profile, 0.0, 2.0, bc, StepControl(rtol=1e-10, atol=1e-12, n_snapshots=41))
    bumped = b.profile.with_values(fb + cfg.delta * np.exp(-(r**2) / 16.0))
    pert = evolve_graph(bumped, 0.0, T, bc, ctrl)
    return bowl, pert


def _harnack_signs(cfg, out):
    checks = []
    for tag, tr in zip(("bowl", "perturbed"), harnack_runs(cfg)):
        rep = check_tip_speed(tr)
        checks += [
            Check(f"min_f_tt[{tag}]", rep.min_ftt, -1e-6, ">="),
            Check(f"min_f_tr[{tag}]", rep.min_ftr, -1e-6, ">="),
            Check(f"min_f_t_minus_H_est[{tag}]", rep.min_ft_gap, -1e-4, ">="),
        ]
        if tag == "bowl":
            checks.append(Check("bowl_tip_slope", rep.tip_slope, (1 - 1e-6, 1 + 1e-6), "in"))
        out.csv(f"tip_{tag}.csv", "mcflab.tip/1", ["t", "f_tip", "sup_f_t_near_tip"],
                zip(tr.times, tr.values[:, 0], rep.near_tip_sup))
    return checks


# ---------------------------------------------------------------------------
# 12. determinism
# ---------------------------------------------------------------------------


def _digest_tree(root):
    """sha256 of every file; manifests are hashed without their wall time."""
    out = {}
    for dirpath, _, names in os.walk(root):
        for name in sorted(names):
            path = os.path.join(dirpath, name)
            with open(path, "rb") as fh:
                data = fh.read()
            if name == "manifest.json":
                d = json.loads(data)
                d.pop("wall_seconds", None)
                data = dumps(d).encode()
            out[os.path.relpath(path, root)] = hashlib.sha256(data).hexdigest()
    return out


def _determinism(cfg, out):
    rows = []
    mismatched = 0
    for target in cfg.targets:
        if target == "determinism":
            raise ValueError("determinism cannot target itself")
        sub = cfg.replace(experiment=target)
        digests = []
        for _ in range(2):
            _clear_caches()
            with tempfile.TemporaryDirectory() as d:
                run(sub, d)
                digests.append(_digest_tree(d))
        same = digests[0] == digests[1]
        mismatched += not same
        for name in sorted(digests[0]):
            rows.append((target, name, digests[0][name], digests[1].get(name, "")))
    out.csv("digests.csv", "mcflab.digests/1", ["experiment", "file", "sha256_first", "sha256_second"], rows)
    return [Check("mismatched_experiments", mismatched, 0, "<=")]


def _clear_caches():
    _rescaled_run.cache_clear()
    _improvement.cache_clear()


# ---------------------------------------------------------------------------
# registry and runner
# ---------------------------------------------------------------------------

REGISTRY = {
    "cylinder-oracle": _cylinder_oracle,
    "bowl-translation": _bowl_translation,
    "rr-z-asymptotics": _rr_z_asymptotics,
    "spectral-table": _spectral_table,
    "rescaled-decay": _rescaled_decay,
    "gaussian-area": _gaussian_area,
    "shrinker-bounds": _shrinker_bounds,
    "neck-mode-law": _neck_mode_law,
    "neck-improvement": _neck_improvement,
    "vanishing-time-sandwich": _vanishing_time_sandwich,
    "harnack-signs": _harnack_signs,
    "determinism": _determinism,
}

CRITERIA = {i + 1: name for i, name in enumerate(REGISTRY)}


def run(config: ExperimentConfig, out_dir) -> RunManifest:
    """Run one experiment into ``out_dir``; writes manifest.json and data files.

    On a solver failure a FAILED marker and a manifest with status 'failed' are
    written next to whatever data files already exist, and ExperimentFailure is raised.
    """
    exp = config.experiment
    if exp not in REGISTRY:
        raise UnknownExperimentError(exp)
    out = _Outputs(out_dir)
    manifest = RunManifest(exp, config.snapshot(), __version__)
    start = time.perf_counter()

    def stamp():
        manifest.wall_seconds = round(time.perf_counter() - start, 3)

    try:
        checks = REGISTRY[exp](config, out)
    except Exception as exc:
        manifest.status = "failed"
        manifest.files = list(out.files)
        stamp()
        atomic_write(os.path.join(out_dir, "FAILED"), f"{type(exc).__name__}: {exc}\n")
        atomic_write(os.path.join(out_dir, "manifest.json"), dumps(manifest.as_dict()))
        raise ExperimentFailure(f"{exp}: {exc}") from exc
    names = [c.name for c in checks]
    if len(set(names)) != len(names):
        raise RuntimeError(f"duplicate check names in {exp}")
    manifest.checks = [c.as_dict() for c in checks]
    manifest.files = list(out.files)
    stamp()
    atomic_write(os.path.join(out_dir, "manifest.json"), dumps(manifest.as_dict()))
    return manifest
