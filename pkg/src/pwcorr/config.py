"""Run configuration: TOML file -> fully resolved RunConfig."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .grid import Grid
from .oscillator import OscillatorParams, StateSpec

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

DEFAULT_LAGS = ("0", "0.125T", "0.25T", "0.375T", "0.5T", "0.625T", "0.75T", "1T")

_PERIOD_RE = re.compile(r"^([-+0-9.eE]*)\*?T(?:/([0-9.eE+]+))?$")


def parse_time(value, period: float) -> float:
    """Number, or a multiple of the period: "0.5T", "T/2", "3T/8", "T"."""
    if isinstance(value, bool):
        raise ConfigurationError(f"not a time: {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    else:
        text = str(value).replace(" ", "")
        m = _PERIOD_RE.match(text)
        try:
            if m:
                coef = float(m.group(1)) if m.group(1) not in ("", "+") else 1.0
                if m.group(1) == "-":
                    coef = -1.0
                out = coef * period / (float(m.group(2)) if m.group(2) else 1.0)
            else:
                out = float(text)
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse time {value!r}") from exc
    if not math.isfinite(out):
        raise ConfigurationError(f"time must be finite, got {value!r}")
    return out


@dataclass(frozen=True)
class EnsembleConfig:
    n: int = 10_000
    scheme: str = "quantile"
    seed: int | None = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"ensemble.n must be a positive integer, got {self.n}")
        if self.scheme not in ("quantile", "random"):
            raise ConfigurationError(f"ensemble.scheme must be quantile or random, got {self.scheme!r}")


@dataclass(frozen=True)
class RunConfig:
    params: OscillatorParams = field(default_factory=OscillatorParams)
    grid: Grid = field(default_factory=lambda: Grid(-10.0, 10.0, 1024))
    dt: float | None = None  # None -> T/1000
    state: StateSpec = field(default_factory=lambda: StateSpec.eigen(0))
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    lags: tuple[float, ...] | None = None  # None -> DEFAULT_LAGS
    t_final: float | None = None  # None -> one period
    fock_dim: int = 32
    record_every: int = 1
    out_dir: str = "out"
    format: str = "both"

    def __post_init__(self):
        T = self.params.period
        if self.dt is None:
            object.__setattr__(self, "dt", T / 1000)
        if self.lags is None:
            object.__setattr__(self, "lags", tuple(parse_time(x, T) for x in DEFAULT_LAGS))
        if self.t_final is None:
            object.__setattr__(self, "t_final", T)
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be positive and finite, got {self.dt}")
        if not self.t_final > 0:
            raise ConfigurationError(f"t_final must be positive, got {self.t_final}")
        if any(tau < 0 for tau in self.lags):
            raise ConfigurationError("lags must be nonnegative")
        if self.fock_dim < 2:
            raise ConfigurationError("fock_dim must be >= 2")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")
        if self.format not in ("csv", "json", "both"):
            raise ConfigurationError(f"format must be csv, json or both, got {self.format!r}")

    @property
    def period(self) -> float:
        return self.params.period

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "dt": self.dt,
            "state": str(self.state),
            "ensemble": {"n": self.ensemble.n, "scheme": self.ensemble.scheme,
                         "seed": self.ensemble.seed},
            "lags": list(self.lags),
            "t_final": self.t_final,
            "fock_dim": self.fock_dim,
            "record_every": self.record_every,
            "out_dir": self.out_dir,
            "format": self.format,
        }


_SECTIONS = {
    "params": {"mass", "omega", "hbar"},
    "grid": {"x_min", "x_max", "n_points"},
    "run": {"dt", "state", "lags", "t_final", "fock_dim"},
    "ensemble": {"n", "scheme", "seed"},
    "output": {"dir", "format", "record_every"},
}


def config_from_mapping(data: dict) -> RunConfig:
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    for name, keys in _SECTIONS.items():
        extra = set(data.get(name, {})) - keys
        if extra:
            raise ConfigurationError(f"unknown keys in [{name}]: {sorted(extra)}")

    try:
        params = OscillatorParams(**data.get("params", {}))
        g = data.get("grid", {})
        grid = Grid(g.get("x_min", -10.0), g.get("x_max", 10.0), g.get("n_points", 1024))
        T = params.period
        run = data.get("run", {})
        ens = EnsembleConfig(**data.get("ensemble", {}))
        out = data.get("output", {})
        return RunConfig(
            params=params,
            grid=grid,
            dt=parse_time(run["dt"], T) if "dt" in run else None,
            state=StateSpec.parse(run.get("state", "eigenstate:0")),
            ensemble=ens,
            lags=tuple(parse_time(x, T) for x in run["lags"]) if "lags" in run else None,
            t_final=parse_time(run["t_final"], T) if "t_final" in run else None,
            fock_dim=int(run.get("fock_dim", 32)),
            record_every=int(out.get("record_every", 1)),
            out_dir=str(out.get("dir", "out")),
            format=str(out.get("format", "both")),
        )
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid TOML: {exc}") from exc
    return config_from_mapping(data)
