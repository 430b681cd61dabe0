"""Flat key=value experiment configuration with typed validation."""

from __future__ import annotations

from dataclasses import dataclass, field

REQUIRED_POSITIVE = (
    "rtol", "atol", "ode_tol", "r_min", "C0", "C1", "C2", "eps0", "eps1", "eps", "L", "K", "delta",
    "a_min", "threshold", "window", "amplitude",
)


def _floats(text):
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in str(text).split(",") if x.strip())


# key -> (parser, default)
SCHEMA = {
    "experiment": (str, "cylinder-oracle"),
    "n": (int, 3),
    "gauge": (str, "radial"),
    "seed": (int, 0),
    "grid": (int, 200),
    "order": (int, 4),
    "t0": (float, -4.0),
    "t1": (float, -1.0),
    "rtol": (float, 1e-8),
    "atol": (float, 1e-10),
    "ode_tol": (float, 1e-10),
    "r_min": (float, 1e-6),
    "C0": (float, 1.0),
    "C1": (float, 10.0),
    "C2": (float, 10.0),
    "eps0": (float, 0.04),
    "eps1": (float, 1e-2),
    "eps": (float, 1e-4),
    "L": (float, 32.0),
    "L_sweep": (_floats, (16.0, 32.0, 64.0)),
    "seeds": (int, 20),
    "sweep_seeds": (int, 5),
    "K": (float, 10.0),
    "delta": (float, 0.05),
    "a_min": (float, 5.0),
    "a_values": (_floats, (10.0, 20.0)),
    "threshold": (float, 0.1),
    "window": (float, 0.3),
    "amplitude": (float, 1e-3),
    "barrier_profile": (str, "erfc"),
    "targets": (lambda s: tuple(x.strip() for x in str(s).split(",") if x.strip()), ("cylinder-oracle", "spectral-table")),
}

CONSTANT_KEYS = ("C0", "C1", "C2", "eps0", "eps1", "K", "delta")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {k: d for k, (_, d) in SCHEMA.items()}
        for k, v in self.values.items():
            if k not in SCHEMA:
                raise ConfigError(f"unknown config key {k!r}")
            parser = SCHEMA[k][0]
            try:
                merged[k] = parser(v) if isinstance(v, str) or not isinstance(v, (tuple, list)) else tuple(v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k!r}: {v!r}") from exc
        for k in REQUIRED_POSITIVE:
            if not merged[k] > 0:
                raise ConfigError(f"{k} must be positive")
        if merged["n"] < 2:
            raise ConfigError("n must be at least 2")
        if merged["gauge"] not in ("radial", "graph", "rescaled"):
            raise ConfigError(f"unknown gauge {merged['gauge']!r}")
        object.__setattr__(self, "values", merged)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def replace(self, **kw):
        v = dict(self.values)
        v.update(kw)
        return ExperimentConfig(v)

    def snapshot(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(self.values.items())}

    def constants(self):
        return {k: self.values[k] for k in CONSTANT_KEYS}

    def to_text(self):
        lines = []
        for k, v in sorted(self.values.items()):
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"


def parse_config(text) -> ExperimentConfig:
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k in vals:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        vals[k] = v
    return ExperimentConfig(vals)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
