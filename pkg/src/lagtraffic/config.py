"""Experiment configuration: flat key = value files plus flag overrides.

A manifest file holds one ``key = value`` pair per line (``#`` starts a
comment); command-line flags win over file values, and the environment
variable LAGTRAFFIC_OUTDIR overrides the output directory only.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .ftl import DensityProfile, box_profile
from .kernels import FAMILIES

OUTDIR_ENV = "LAGTRAFFIC_OUTDIR"


class ConfigError(ValueError):
    """Invalid manifest line or field value."""


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: str = "exp"
    kernels: tuple = ("exp",)
    alphas: tuple = (0.5,)
    ell: float = 0.06
    velocity: str = "linear"
    profile: str = "box:1,0.05,0.75"
    t_end: float = 1.4
    safety: float = 0.9
    boundary: str = "ghost"
    outdir: str = "results"
    record_every: int = 0          # 0 = record the final state only
    tail_tol: float = 1e-12
    seed: int = 2024
    trials: int = 1000

    def validate(self, allow_unsafe_cfl: bool = False) -> "ExperimentConfig":
        if self.kernel not in FAMILIES:
            raise ConfigError(f"kernel: unknown family {self.kernel!r}")
        for k in self.kernels:
            if k not in FAMILIES:
                raise ConfigError(f"kernels: unknown family {k!r}")
        if not self.kernels:
            raise ConfigError("kernels: list must not be empty")
        if not self.alphas:
            raise ConfigError("alpha: list must not be empty")
        for a in self.alphas:
            if not a > 0:
                raise ConfigError(f"alpha: must be positive, got {a}")
        if not self.ell > 0:
            raise ConfigError(f"ell: must be positive, got {self.ell}")
        safety_cap = float("inf") if allow_unsafe_cfl else 1.0
        if not 0.0 < self.safety <= safety_cap:
            raise ConfigError(f"safety: must lie in (0, 1], got {self.safety}")
        if self.boundary not in ("ghost", "fold"):
            raise ConfigError(f"boundary: must be 'ghost' or 'fold', "
                              f"got {self.boundary!r}")
        if self.t_end < 0:
            raise ConfigError(f"t_end: must be nonnegative, got {self.t_end}")
        if self.record_every < 0:
            raise ConfigError("record_every: must be nonnegative")
        if not 0.0 < self.tail_tol < 1.0:
            raise ConfigError("tail_tol: must lie in (0, 1)")
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        parse_profile(self.profile)
        return self

    @property
    def alpha(self) -> float:
        return self.alphas[0]


def parse_profile(spec: str) -> DensityProfile:
    """Build the initial density from its textual form.

    ``box:inside,outside,half_width`` or
    ``piecewise:v0,b1,v1,b2,v2,...`` (values alternating with strictly
    increasing breakpoints).
    """
    try:
        scheme, _, body = spec.partition(":")
        parts = [float(p) for p in body.split(",")] if body else []
        if scheme == "box":
            inside, outside, half_width = parts
            return box_profile(inside, outside, half_width)
        if scheme == "piecewise":
            if len(parts) % 2 == 0:
                raise ValueError("need values alternating with breakpoints")
            return DensityProfile(breaks=np.asarray(parts[1::2]),
                                  values=np.asarray(parts[0::2]))
        raise ValueError(f"unknown profile scheme {scheme!r}")
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"profile: cannot parse {spec!r} ({exc})") from None


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in ("kernels",):
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    if key in ("alphas", "alpha"):
        try:
            return tuple(float(p) for p in raw.split(",") if p.strip())
        except ValueError:
            raise ConfigError(f"{key}: expected numbers, got {raw!r}") from None
    if key in ("ell", "t_end", "safety", "tail_tol"):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if key in ("record_every", "seed", "trials"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    return raw


def apply_assignments(cfg: ExperimentConfig, items: dict) -> ExperimentConfig:
    """Apply key -> raw-string (or already-typed) assignments."""
    updates = {}
    for key, raw in items.items():
        name = "alphas" if key == "alpha" else key
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        updates[name] = _parse_value(key, raw) if isinstance(raw, str) else raw
    return replace(cfg, **updates)


def load_config_file(cfg: ExperimentConfig, path) -> ExperimentConfig:
    """Fold a manifest file into cfg; malformed lines name their number."""
    items = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            key, eq, value = text.partition("=")
            if not eq:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                                  f"got {text!r}")
            key = key.strip()
            name = "alphas" if key == "alpha" else key
            if name not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                items[name] = _parse_value(key, value.strip())
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return replace(cfg, **items)
