"""Run configuration: a JSON file merged with command-line overrides."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

METHODS = ("nufft", "l1", "bcd")
REGULARIZERS = ("identity", "tv")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs besides its input files.

    ``simulation`` is only read by ``simulate``. It holds ``alpha_bg``,
    ``beta_true``, a ``scatterers`` list of ``{ix, iy, amplitude,
    visible_deg}`` records and an ``acquisition`` block (``kind`` is
    ``"polar"`` or ``"cartesian"``).
    """

    nx: int = 128
    ny: int = 128
    extent: float = 64.0
    method: str = "bcd"
    regularizer: str = "identity"
    span: float = 40.0
    overlap: float = 10.0
    eps: float = 0.01
    max_iters: int = 100
    lam: float = 1.0 / 20.0
    admm_iters: int = 20
    admm_beta: float = 1.0
    admm_rho: float = 1.0
    workers: int = 1
    seed: int = 0
    covariance: str = "auto"  # "auto" stores covariances only when cheap, or "always" / "never"
    out: str = "out"
    simulation: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.regularizer not in REGULARIZERS:
            raise ConfigError(f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}")
        if self.covariance not in ("auto", "always", "never"):
            raise ConfigError("covariance must be 'auto', 'always' or 'never'")
        for name in ("nx", "ny", "max_iters", "admm_iters", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("extent", "span", "eps", "lam", "admm_beta", "admm_rho"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite")
        if not (0 <= self.overlap < self.span):
            raise ConfigError("overlap must satisfy 0 <= overlap < span")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        kw = {}
        for name, value in data.items():
            default = known[name].default
            try:
                if isinstance(default, bool) or name == "simulation":
                    kw[name] = value
                elif isinstance(default, int):
                    if isinstance(value, float) and not value.is_integer():
                        raise ValueError
                    kw[name] = int(value)
                elif isinstance(default, float):
                    kw[name] = float(value)
                else:
                    kw[name] = str(value)
            except (TypeError, ValueError):
                raise ConfigError(f"invalid value for {name!r}: {value!r}") from None
        if "simulation" in kw and not isinstance(kw["simulation"], dict):
            raise ConfigError("'simulation' must be an object")
        return cls(**kw)

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        """Read ``path`` (JSON) and apply ``overrides``; overrides win.

        ``None`` override values are ignored so unset flags keep the file's
        setting.
        """
        data = {}
        if path is not None:
            try:
                with open(path, encoding="utf-8") as fh:
                    data = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
            if not isinstance(data, dict):
                raise ConfigError(f"config {path} must hold a JSON object")
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)
