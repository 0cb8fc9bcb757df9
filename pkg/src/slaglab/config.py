"""Run configuration: a versioned, hashable description of one experiment."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

SCHEMA_VERSION = 1
DEFAULT_ALPHAS = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class Config:
    """All knobs of a run.

    ``K`` is a floor: the effective constant is max(K, K measured from the
    exterior pieces), so flat pieces still give a finite gluing radius.
    ``exterior`` is "flat" or "cubic" (random symmetric cubic graphs of size
    ``cubic_scale``, seeded by ``seed``).
    """

    schema: int = SCHEMA_VERSION
    a: tuple = (1.0, 1.0, 1.0)
    beta: float = 0.1
    K: float = 1.0
    C0: float | None = None
    exterior: str = "flat"
    cubic_scale: float = 0.0
    seed: int = 0
    alphas: tuple = DEFAULT_ALPHAS
    alpha_max: float = 0.25
    quad_tol: float = 1e-13
    mesh_level: int = 3
    layers: int = 64
    first_dlam: float = 0.4
    collar: float = 0.2
    n_eig: int = 8
    weight_R: float = 1.0
    weight_b: float = 1.0
    weight_a_factor: float = 1.0  # inner weight radius a = factor * R0
    weight_smoothing: float = 0.25  # fraction of the interpolation rounded at each joint
    weight_profile: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "alphas", tuple(float(x) for x in self.alphas))
        self.validate()

    @property
    def n(self) -> int:
        return len(self.a)

    def validate(self) -> None:
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {self.schema} (expected {SCHEMA_VERSION})")
        if len(self.a) < 3 or min(self.a) <= 0:
            raise ConfigError("a needs at least three positive entries")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.K <= 0:
            raise ConfigError("K must be positive")
        if self.exterior not in ("flat", "cubic"):
            raise ConfigError("exterior must be 'flat' or 'cubic'")
        if not self.alphas or any(x <= 0 for x in self.alphas):
            raise ConfigError("alphas must be positive")
        if self.quad_tol <= 0:
            raise ConfigError("quad_tol must be positive")
        if self.mesh_level < 0 or self.layers < 2 or self.layers % 2:
            raise ConfigError("mesh_level >= 0 and an even layer count are required")
        if self.weight_profile not in ("linear", "log"):
            raise ConfigError("weight_profile must be 'linear' or 'log'")
        if not 0 < self.weight_smoothing < 0.5:
            raise ConfigError("weight_smoothing must lie in (0, 1/2)")
        if self.n_eig < 3:
            raise ConfigError("n_eig must be at least 3")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a"] = list(self.a)
        d["alphas"] = list(self.alphas)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "Config":
        try:
            d = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls.from_dict(d)

    def with_overrides(self, **kw) -> "Config":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self
