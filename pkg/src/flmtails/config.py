"""YAML run configuration shared by every command.

Every mapping is checked against a fixed key set, so a misspelt key is an
error rather than a silently ignored default.  ``RunConfig.to_dict`` and
``RunConfig.from_dict`` round-trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
import yaml

from ._validation import ConfigError, FLMError, check_hurst
from .levy_measure import LevyMeasure, _enc, _dec

__all__ = ["RunConfig", "GridSpec", "load_config", "parse_config", "dump_config"]

FORMATS = ("csv", "json")
SAMPLE_FORMATS = ("binary", "csv")


def _strict(d, allowed, where):
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")
    return d


def _float(v, where):
    try:
        return _dec(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a number, got {v!r}") from None


def _float_list(v, where):
    if isinstance(v, (int, float, str)):
        v = [v]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where} must be a number or a non-empty list")
    return [_float(x, where) for x in v]


@dataclass(frozen=True)
class GridSpec:
    """Explicit points, or ``n`` equally spaced points on ``[lo, hi]``."""

    points: Optional[tuple] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    n: Optional[int] = None

    def values(self) -> np.ndarray:
        if self.points is not None:
            return np.array(self.points, dtype=float)
        return np.linspace(self.lo, self.hi, self.n)

    @classmethod
    def parse(cls, v, where):
        if isinstance(v, dict):
            d = _strict(v, {"lo", "hi", "n"}, where)
            if set(d) != {"lo", "hi", "n"}:
                raise ConfigError(f"{where} needs lo, hi and n")
            lo, hi, n = _float(d["lo"], where), _float(d["hi"], where), d["n"]
            if not isinstance(n, int) or n < 2 or not lo < hi:
                raise ConfigError(f"{where}: need lo < hi and integer n >= 2")
            return cls(lo=lo, hi=hi, n=n)
        return cls(points=tuple(_float_list(v, where)))

    def to_obj(self):
        if self.points is not None:
            return [_enc(p) for p in self.points]
        return {"lo": self.lo, "hi": self.hi, "n": self.n}


@dataclass(frozen=True)
class RunConfig:
    measure: LevyMeasure
    H: float
    lambda_trunc: Optional[float] = None
    t: tuple = (1.0,)
    x: GridSpec = field(default_factory=lambda: GridSpec(lo=-5.0, hi=5.0, n=101))
    regime: str = "auto"
    ex41: Optional[tuple] = None
    n_samples: int = 100_000
    jump_floor: float = 0.5
    s_min: Optional[float] = None
    small_jump_mode: str = "drop_compensated"
    block_size: int = 4096
    sample_format: str = "binary"
    bandwidth: float = 0.05
    only: Optional[tuple] = None
    tolerance_scale: float = 1.0
    out: Optional[str] = None
    format: str = "csv"
    seed: int = 0

    def with_overrides(self, **kw) -> "RunConfig":
        """Command-line values win over the file; ``None`` means not given."""
        kw = {k: v for k, v in kw.items() if v is not None}
        if "only" in kw and isinstance(kw["only"], str):
            kw["only"] = tuple(s for s in kw["only"].split(",") if s)
        cfg = replace(self, **kw)
        cfg._validate()
        return cfg

    def _validate(self):
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.sample_format not in SAMPLE_FORMATS:
            raise ConfigError(f"sample_format must be one of {SAMPLE_FORMATS}")
        if not (self.tolerance_scale > 0 and math.isfinite(self.tolerance_scale)):
            raise ConfigError("tolerance_scale must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.bandwidth > 0:
            raise ConfigError("bandwidth must be positive")
        if any(not tt > 0 for tt in self.t):
            raise ConfigError("every t must be positive")

    # -- (de)serialisation ---------------------------------------------
    def to_dict(self) -> dict:
        model = {"H": self.H, "measure": self.measure.to_dict()}
        if self.lambda_trunc is not None:
            model["lambda"] = self.lambda_trunc
        d: dict[str, Any] = {
            "model": model,
            "t": list(self.t),
            "x": self.x.to_obj(),
            "asymptote": {"regime": self.regime},
            "simulate": {
                "n_samples": self.n_samples,
                "jump_floor": self.jump_floor,
                "small_jump_mode": self.small_jump_mode,
                "block_size": self.block_size,
                "sample_format": self.sample_format,
                "bandwidth": self.bandwidth,
            },
            "verify": {"tolerance_scale": self.tolerance_scale},
            "output": {"format": self.format},
            "seed": self.seed,
        }
        if self.ex41 is not None:
            d["asymptote"]["ex41"] = dict(zip(("alpha", "C_minus", "C_plus"), self.ex41))
        if self.s_min is not None:
            d["simulate"]["s_min"] = self.s_min
        if self.only is not None:
            d["verify"]["only"] = list(self.only)
        if self.out is not None:
            d["output"]["path"] = self.out
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = _strict(d, {"model", "t", "x", "asymptote", "simulate", "verify", "output", "seed"}, "config")
        if "model" not in d:
            raise ConfigError("config needs a 'model' section")
        m = _strict(d["model"], {"H", "lambda", "measure"}, "model")
        if "H" not in m or "measure" not in m:
            raise ConfigError("model needs 'H' and 'measure'")
        try:
            H = check_hurst(_float(m["H"], "model.H"))
            mu = LevyMeasure.from_dict(_strict(m["measure"], {"atoms", "pieces"}, "model.measure"))
        except FLMError as exc:
            raise ConfigError(str(exc)) from None
        lam = m.get("lambda")
        lam = None if lam is None else _float(lam, "model.lambda")
        kw: dict[str, Any] = {"measure": mu, "H": H, "lambda_trunc": lam}
        if "t" in d:
            kw["t"] = tuple(_float_list(d["t"], "t"))
        if "x" in d:
            kw["x"] = GridSpec.parse(d["x"], "x")
        a = _strict(d.get("asymptote"), {"regime", "ex41"}, "asymptote")
        if "regime" in a:
            kw["regime"] = str(a["regime"])
        if a.get("ex41") is not None:
            e = _strict(a["ex41"], {"alpha", "C_minus", "C_plus"}, "asymptote.ex41")
            if set(e) != {"alpha", "C_minus", "C_plus"}:
                raise ConfigError("asymptote.ex41 needs alpha, C_minus and C_plus")
            kw["ex41"] = tuple(_float(e[k], f"asymptote.ex41.{k}") for k in ("alpha", "C_minus", "C_plus"))
        s = _strict(d.get("simulate"), {"n_samples", "jump_floor", "s_min", "small_jump_mode", "block_size",
                                        "sample_format", "bandwidth"}, "simulate")
        for k in ("n_samples", "block_size"):
            if k in s:
                if not isinstance(s[k], int) or s[k] <= 0:
                    raise ConfigError(f"simulate.{k} must be a positive integer")
                kw[k] = s[k]
        for k in ("jump_floor", "bandwidth"):
            if k in s:
                kw[k] = _float(s[k], f"simulate.{k}")
        if s.get("s_min") is not None:
            kw["s_min"] = _float(s["s_min"], "simulate.s_min")
        for k in ("small_jump_mode", "sample_format"):
            if k in s:
                kw[k] = str(s[k])
        v = _strict(d.get("verify"), {"only", "tolerance_scale"}, "verify")
        if v.get("only") is not None:
            only = v["only"]
            kw["only"] = tuple([only] if isinstance(only, str) else [str(o) for o in only])
        if "tolerance_scale" in v:
            kw["tolerance_scale"] = _float(v["tolerance_scale"], "verify.tolerance_scale")
        o = _strict(d.get("output"), {"path", "format"}, "output")
        if o.get("path") is not None:
            kw["out"] = str(o["path"])
        if "format" in o:
            kw["format"] = str(o["format"])
        if "seed" in d:
            if not isinstance(d["seed"], int):
                raise ConfigError("seed must be an integer")
            kw["seed"] = d["seed"]
        cfg = cls(**kw)
        cfg._validate()
        return cfg


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse config: {exc}") from None
    return RunConfig.from_dict(data)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
