"""Human-readable and JSON summaries of run manifests."""

from __future__ import annotations

import json
import os

from .config import CONSTANT_KEYS
from .experiments import RunManifest
from .io import dumps


class ReportDataError(FileNotFoundError):
    """A manifest lists a data file that is not on disk."""


def _load(item):
    """-> (manifest, root directory or None)."""
    if isinstance(item, RunManifest):
        return item, None
    if isinstance(item, dict):
        return RunManifest.from_dict(item), None
    path = os.fspath(item)
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    if not os.path.exists(path):
        raise ReportDataError(path)
    with open(path) as fh:
        return RunManifest.from_dict(json.load(fh)), os.path.dirname(path)


def _fmt(v):
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (int, float)):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _check_line(c):
    mark = "PASS" if c["passed"] else "FAIL"
    rel = c["relation"]
    line = f"  {mark}  {c['name']:<34} {_fmt(c['value'])} {rel} {_fmt(c['bound'])}"
    if c["margin"] is not None:
        line += f"  margin {_fmt(c['margin'])}"
    if c.get("note"):
        line += f"  ({c['note']})"
    return line


def emit_report(manifests, data_root=None):
    """Summarize manifests as (text, json_text).

    ``manifests`` is one manifest (object, dict, manifest path or run
    directory) or a list of them. Listed data files are checked for existence
    when the run directory is known. Runs without checks are skipped, so an
    empty manifest gives an empty report.
    """
    if not isinstance(manifests, (list, tuple)):
        manifests = [manifests]
    runs = []
    for item in manifests:
        m, root = _load(item)
        root = root or data_root
        if root is not None:
            for name in m.files:
                if not os.path.exists(os.path.join(root, name)):
                    raise ReportDataError(os.path.join(root, name))
        if not m.checks and m.status == "ok":
            continue
        runs.append(m)
    if not runs:
        return "", dumps({"runs": []})
    lines = []
    for m in runs:
        head = "PASS" if m.passed else "FAIL"
        lines.append(f"[{head}] {m.experiment} (n={m.config.get('n')}, seed={m.config.get('seed')}, status={m.status})")
        lines.append("  constants: " + " ".join(f"{k}={_fmt(m.config.get(k))}" for k in CONSTANT_KEYS))
        lines.extend(_check_line(c) for c in m.checks)
    npass = sum(m.passed for m in runs)
    lines.append(f"summary: {npass}/{len(runs)} experiments passed")
    doc = {
        "runs": [
            {
                "experiment": m.experiment,
                "passed": m.passed,
                "status": m.status,
                "constants": {k: m.config.get(k) for k in CONSTANT_KEYS},
                "checks": m.checks,
            }
            for m in runs
        ],
        "passed": npass == len(runs),
    }
    return "\n".join(lines) + "\n", dumps(doc)
