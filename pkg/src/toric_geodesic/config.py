"""Experiment definitions: a single JSON file per run."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

from .degeneration import ToricDegeneration, algebraic_ray, build_hat_polytope
from .geodesic import GeodesicRay
from .polytope import PiecewiseLinearFn, Polytope
from .potentials import LegendreDualField, SymplecticPotential, guillemin_potential


class ConfigError(ValueError):
    """Raised for malformed or out-of-range experiment configurations."""


@dataclass
class ExperimentConfig:
    """Configuration plus numeric knobs; defaults match the acceptance suite.

    ``polytope`` and ``direction`` are JSON objects, or paths to JSON files
    (resolved relative to ``base_dir``).  ``initial`` picks ``u_0``:
    ``"algebraic"`` is the Legendre dual of ``h_{0,0}``, ``"guillemin"`` the
    canonical potential of ``P``.
    """

    polytope: dict | str
    direction: dict | str
    K: str = "1"
    initial: str = "algebraic"
    t_list: list = field(default_factory=lambda: [0.0, 5.0, 10.0])
    t_max: int = 10
    k_max: int | None = None
    grid: int = 64
    window: float = 5.0
    samples: int = 4001
    eps: float = 0.02
    numeric_yen: bool = False
    tol: float = 1e-12
    out: str = "out"
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.initial not in ("algebraic", "guillemin"):
            raise ConfigError(f"initial must be 'algebraic' or 'guillemin', not {self.initial!r}")
        try:
            Fraction(self.K)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"K is not a rational number: {self.K!r}") from exc
        if any(float(t) < 0 for t in self.t_list):
            raise ConfigError("t_list entries must be non-negative")
        if not 1 <= self.t_max <= 200:
            raise ConfigError("t_max must lie in [1, 200]")
        if self.k_max is not None and not 4 <= self.k_max <= 400:
            raise ConfigError("k_max must lie in [4, 400]")
        if not 4 <= self.grid <= 1024:
            raise ConfigError("grid must lie in [4, 1024]")
        if not self.window > 0:
            raise ConfigError("window must be positive")
        if not 11 <= self.samples <= 10 ** 6:
            raise ConfigError("samples must lie in [11, 1e6]")
        if not 0 < self.eps <= 0.5:
            raise ConfigError("eps must lie in (0, 0.5]")
        for key in ("polytope", "direction"):
            ref = getattr(self, key)
            if isinstance(ref, str) and not os.path.isfile(self._path(ref)):
                raise ConfigError(f"{key} file not found: {ref}")

    def _path(self, ref: str) -> str:
        return ref if os.path.isabs(ref) else os.path.join(self.base_dir, ref)

    def _load(self, ref):
        if isinstance(ref, str):
            with open(self._path(ref)) as fh:
                return json.load(fh)
        return ref

    # -- construction -------------------------------------------------------

    def build_polytope(self) -> Polytope:
        try:
            return Polytope.from_dict(self._load(self.polytope))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed polytope: {exc}") from exc

    def build_direction(self) -> PiecewiseLinearFn:
        try:
            return PiecewiseLinearFn.from_dict(self._load(self.direction))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed direction: {exc}") from exc

    def build_configuration(self) -> ToricDegeneration:
        return build_hat_polytope(self.build_polytope(), self.build_direction(), Fraction(self.K))

    def build_ray(self, cfg: ToricDegeneration | None = None) -> GeodesicRay:
        cfg = cfg or self.build_configuration()
        if self.initial == "guillemin":
            u0 = guillemin_potential(cfg.base)
        else:
            u0 = SymplecticPotential(cfg.base, guillemin=False,
                                     correction=LegendreDualField(algebraic_ray(cfg, 0.0)))
        return GeodesicRay(u0, cfg.direction)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "ExperimentConfig":
        known = {f.name for f in fields(cls)} - {"base_dir"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for key in ("polytope", "direction"):
            if key not in d:
                raise ConfigError(f"missing config key: {key}")
        try:
            return cls(**d, base_dir=base_dir)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str, base_dir: str = ".") -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d, base_dir)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_json(text, os.path.dirname(os.path.abspath(path)))

    @classmethod
    def example(cls, **kw) -> "ExperimentConfig":
        """``P = [0, 2]``, ``f = max(0, x - 1)``, ``K = 1``."""
        return cls(polytope=Polytope.interval(0, 2).to_dict(),
                   direction={"pieces": [{"a": [0], "c": "0"}, {"a": [1], "c": "-1"}]},
                   K="1", **kw)
