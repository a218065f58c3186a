"""Run configuration: parsing, validation and scheme/model construction.

Configs are flat `key = value` text files (JSON objects are accepted as an
alternative).  Unknown keys are rejected before any compute starts.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, fields

from .hamiltonian import ModelSpec
from .scheme import golden_scheme, scheme_from_slope

OPEN_BOUNDARY = "open"
PERIODIC_BOUNDARY = "periodic"


class ConfigError(ValueError):
    """Invalid or unparsable run configuration."""


def _parse_float(value, key):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_int(value, key):
    try:
        return int(str(value))
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_int_pair(value, key):
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = str(value).replace(",", " ").split()
    if len(items) != 2:
        raise ConfigError(f"{key}: expected two integers, got {value!r}")
    return tuple(_parse_int(v, key) for v in items)


def _parse_grid(value, key):
    if isinstance(value, str) and value.strip() == "auto":
        return "auto"
    items = list(value) if isinstance(value, (list, tuple)) else str(value).replace(",", " ").split()
    if len(items) != 3:
        raise ConfigError(f"{key}: expected `lo,hi,n` or `auto`, got {value!r}")
    lo, hi = float(items[0]), float(items[1])
    n = _parse_int(items[2], key)
    if not lo < hi or n < 2:
        raise ConfigError(f"{key}: need lo < hi and n >= 2")
    return (lo, hi, n)


@dataclass
class RunConfig:
    """Validated parameters for one pipeline run."""

    alpha: object = "golden"        # 'golden' or a real in (0, 1)
    theta: object = "canonical"     # 'canonical' or a real in [0, 1)
    window: object = "canonical"    # 'canonical' or `w0,w1`
    spacing_a: float = 1.0
    spacing_b: float = 1.0
    model: str = "onsite"
    lam: float = 2.0
    t_a: float = 1.0
    t_b: float = 2.0
    approximants: tuple = (13, 15)  # convergent indices; golden -> q = 377, 987
    pattern: str | None = None      # set for periodic controls
    cells: tuple = (50, 100)        # unit cells per size in pattern mode
    phases: int = 32
    coeff_bound: int = 50
    label_tol: object = "auto"      # 'auto' = 5/q, or a fixed tolerance
    gap_threshold: float = 10.0
    cylinder_depth: int = 8
    dense_limit: int = 4096
    length: int = 987               # word length for generate/spectrum
    boundary: str = PERIODIC_BOUNDARY
    grid: object = "auto"           # ids-curve grid: `lo,hi,n` or 'auto'
    seed: int | None = None         # set -> letter-shuffled negative control
    out: str = "out"
    threads: int = 1
    # optional second-factor overrides for the separable Z^2 run
    model2: str | None = None
    lam2: float | None = None
    t_a2: float | None = None
    t_b2: float | None = None
    pattern2: str | None = None

    def __post_init__(self):
        if self.model not in ("onsite", "offdiagonal"):
            raise ConfigError(f"model must be onsite or offdiagonal, got {self.model!r}")
        if self.model2 is not None and self.model2 not in ("onsite", "offdiagonal"):
            raise ConfigError(f"model2 must be onsite or offdiagonal, got {self.model2!r}")
        if self.boundary not in (OPEN_BOUNDARY, PERIODIC_BOUNDARY):
            raise ConfigError(f"boundary must be open or periodic, got {self.boundary!r}")
        if isinstance(self.alpha, str) and self.alpha != "golden":
            raise ConfigError(f"alpha must be 'golden' or a number, got {self.alpha!r}")
        if not isinstance(self.alpha, str) and not 0.0 < float(self.alpha) < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if len(self.approximants) != 2 or not 1 <= self.approximants[0] < self.approximants[1]:
            raise ConfigError("approximants must be two increasing convergent indices")
        if len(self.cells) != 2 or not 1 <= self.cells[0] < self.cells[1]:
            raise ConfigError("cells must be two increasing cell counts")
        for name in ("spacing_a", "spacing_b", "t_a", "t_b", "gap_threshold"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.pattern is not None and (not self.pattern or set(self.pattern) - {"A", "B"}):
            raise ConfigError("pattern must be a nonempty string over {A, B}")
        if self.pattern2 is not None and (not self.pattern2 or set(self.pattern2) - {"A", "B"}):
            raise ConfigError("pattern2 must be a nonempty string over {A, B}")
        if self.phases < 0 or self.coeff_bound < 1 or self.cylinder_depth < 1:
            raise ConfigError("phases, coeff_bound and cylinder_depth must be positive")
        if self.length < 1 or self.dense_limit < 2 or self.threads < 1:
            raise ConfigError("length, dense_limit and threads must be positive")
        if not isinstance(self.label_tol, str):
            if float(self.label_tol) <= 0:
                raise ConfigError("label_tol must be positive")
        elif self.label_tol != "auto":
            raise ConfigError(f"label_tol must be 'auto' or a number, got {self.label_tol!r}")

    def label_tolerances(self, sizes):
        if self.label_tol == "auto":
            return 5.0 / sizes[0], 5.0 / sizes[1]
        t = float(self.label_tol)
        return t, t

    def factor_pattern(self, which):
        if which == 2 and self.pattern2 is not None:
            return self.pattern2
        return self.pattern

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_PARSERS = {
    "alpha": lambda v, k: v if v == "golden" else _parse_float(v, k),
    "theta": lambda v, k: v if v == "canonical" else _parse_float(v, k),
    "window": lambda v, k: v,
    "spacing_a": _parse_float,
    "spacing_b": _parse_float,
    "model": lambda v, k: str(v),
    "lam": _parse_float,
    "t_a": _parse_float,
    "t_b": _parse_float,
    "approximants": _parse_int_pair,
    "pattern": lambda v, k: str(v),
    "cells": _parse_int_pair,
    "phases": _parse_int,
    "coeff_bound": _parse_int,
    "label_tol": lambda v, k: v if v == "auto" else _parse_float(v, k),
    "gap_threshold": _parse_float,
    "cylinder_depth": _parse_int,
    "dense_limit": _parse_int,
    "length": _parse_int,
    "boundary": lambda v, k: str(v),
    "grid": _parse_grid,
    "seed": _parse_int,
    "out": lambda v, k: str(v),
    "threads": _parse_int,
    "model2": lambda v, k: str(v),
    "lam2": _parse_float,
    "t_a2": _parse_float,
    "t_b2": _parse_float,
    "pattern2": lambda v, k: str(v),
}


def config_from_mapping(mapping):
    kwargs = {}
    for key, value in mapping.items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[key] = _PARSERS[key](value, key)
    try:
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_from_file(path):
    """Parse a config file: JSON object or flat `key = value` lines."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            mapping = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(mapping, dict):
            raise ConfigError("JSON config must be an object")
        return config_from_mapping(mapping)
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in mapping:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        mapping[key] = value
    return config_from_mapping(mapping)


def scheme_from_config(config, which=1):
    """CutProjectScheme for the config, or None when in periodic-pattern mode."""
    if config.factor_pattern(which) is not None:
        return None
    ell = (config.spacing_a, config.spacing_b)
    window = None
    if config.window != "canonical":
        parts = str(config.window).replace(",", " ").split()
        if len(parts) != 2:
            raise ConfigError("window must be 'canonical' or `w0,w1`")
        window = (float(parts[0]), float(parts[1]))
    if config.alpha == "golden":
        scheme = golden_scheme(*ell)
        updates = {}
        if config.theta != "canonical":
            updates.update(theta=float(config.theta), theta_lo=0.0)
        if window is not None:
            updates.update(window=window)
        return dataclasses.replace(scheme, **updates) if updates else scheme
    theta = None if config.theta == "canonical" else float(config.theta)
    return scheme_from_slope(
        float(config.alpha), theta=theta, window=window, ell_a=ell[0], ell_b=ell[1]
    )


def model_from_config(config, which=1):
    if which == 2:
        kind = config.model2 or config.model
        lam = config.lam if config.lam2 is None else config.lam2
        t_a = config.t_a if config.t_a2 is None else config.t_a2
        t_b = config.t_b if config.t_b2 is None else config.t_b2
        return ModelSpec(kind, lam=lam, t_a=t_a, t_b=t_b)
    return ModelSpec(config.model, lam=config.lam, t_a=config.t_a, t_b=config.t_b)
