"""
YAML run configuration.

A config has the sections ``barrier`` (required), ``units``, ``packet``,
``grids``, ``tolerances`` and ``outputs``; everything but the barrier has
defaults. Example::

    barrier:
      support: [-1.0, 1.0]
      segments: [[-1.0, 1.0, 4.0]]   # [x_start, x_end, height]
      deltas: [[0.0, 2.0]]           # [position, strength]
    packet: {k0: 2.0, l: 10.0, L: 60.0}
    grids:
      k: {start: 0.1, stop: 3.0, num: 200}
      t: {start: 0.0, stop: 40.0, num: 81}

Unknown keys are an error under ``strict`` and a warning otherwise.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, fields

import numpy as np
import yaml

from .potential import PotentialError, PotentialSpec, UnitsConfig, make_spec
from .wavepacket import DEFAULT_NK, DEFAULT_SPAN


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BarrierConfig:
    support: tuple[float, float] = (-1.0, 1.0)
    segments: tuple[tuple[float, float, float], ...] = ()
    deltas: tuple[tuple[float, float], ...] = ()

    def spec(self) -> PotentialSpec:
        return make_spec(self.segments, self.deltas, self.support)


@dataclass(frozen=True)
class PacketConfig:
    k0: float
    l: float  # noqa: E741
    L: float


@dataclass(frozen=True)
class KGridConfig:
    start: float = 0.1
    stop: float = 3.0
    num: int = 200

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class PacketKConfig:
    num: int = DEFAULT_NK
    span: float = DEFAULT_SPAN


@dataclass(frozen=True)
class XGridConfig:
    step: float = 0.05


@dataclass(frozen=True)
class TGridConfig:
    start: float = 0.0
    stop: float = 40.0
    num: int = 81

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class GridsConfig:
    k: KGridConfig = KGridConfig()
    packet_k: PacketKConfig = PacketKConfig()
    x: XGridConfig = XGridConfig()
    t: TGridConfig = TGridConfig()


@dataclass(frozen=True)
class TolerancesConfig:
    identity: float = 1e-12
    oracle_T: float = 1e-8
    oracle_phase: float = 1e-7
    node: float = 1e-10
    current: float = 1e-8
    norm: float = 1e-6
    overlap: float = 1e-10


@dataclass(frozen=True)
class OutputsConfig:
    directory: str = "out"
    snapshot_stride: int = 10


@dataclass(frozen=True)
class RunConfig:
    barrier: BarrierConfig
    units: UnitsConfig = UnitsConfig()
    packet: PacketConfig | None = None
    grids: GridsConfig = GridsConfig()
    tolerances: TolerancesConfig = TolerancesConfig()
    outputs: OutputsConfig = OutputsConfig()


# -- field converters -----------------------------------------------------------

def _real(v, path):
    if isinstance(v, str):
        # YAML 1.1 reads exponents without a dot (1e-12) as strings
        try:
            v = float(v)
        except ValueError:
            raise ConfigError(f"{path}: expected a number, got {v!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    return v


def _positive(v, path):
    v = _real(v, path)
    if v <= 0:
        raise ConfigError(f"{path}: must be > 0, got {v:g}")
    return v


def _count(v, path):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"{path}: expected a positive integer, got {v!r}")
    return v


def _text(v, path):
    if not isinstance(v, str) or not v:
        raise ConfigError(f"{path}: expected a non-empty string")
    return v


def _tuple_of(n):
    def conv(v, path):
        if not isinstance(v, (list, tuple)) or len(v) != n:
            raise ConfigError(f"{path}: expected a list of {n} numbers")
        return tuple(_real(x, f"{path}[{i}]") for i, x in enumerate(v))
    return conv


def _list_of(item):
    def conv(v, path):
        if v is None:
            return ()
        if not isinstance(v, list):
            raise ConfigError(f"{path}: expected a list")
        return tuple(item(x, f"{path}[{i}]") for i, x in enumerate(v))
    return conv


_CONVERTERS = {
    BarrierConfig: {"support": _tuple_of(2), "segments": _list_of(_tuple_of(3)),
                    "deltas": _list_of(_tuple_of(2))},
    UnitsConfig: {"hbar": _positive, "mass": _positive},
    PacketConfig: {"k0": _positive, "l": _positive, "L": _positive},
    KGridConfig: {"start": _positive, "stop": _positive, "num": _count},
    PacketKConfig: {"num": _count, "span": _positive},
    XGridConfig: {"step": _positive},
    TGridConfig: {"start": _real, "stop": _real, "num": _count},
    TolerancesConfig: {f.name: _positive for f in fields(TolerancesConfig)},
    OutputsConfig: {"directory": _text, "snapshot_stride": _count},
}


def _section(cls, data, path, strict):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            msg = f"unknown key {path}.{key}" if path else f"unknown key {key}"
            if strict:
                raise ConfigError(msg)
            warnings.warn(msg, stacklevel=3)
    conv = _CONVERTERS.get(cls)
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        sub = f"{path}.{f.name}" if path else f.name
        if conv is not None:
            kwargs[f.name] = conv[f.name](data[f.name], sub)
        else:
            kwargs[f.name] = _section(_NESTED[cls][f.name], data[f.name], sub, strict)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        missing = [f.name for f in fields(cls) if f.name not in kwargs
                   and f.default is dataclasses.MISSING
                   and f.default_factory is dataclasses.MISSING]
        where = f"{path}.{missing[0]}" if missing and path else (missing[0] if missing else path)
        raise ConfigError(f"{where}: required field missing") from exc


_NESTED = {
    RunConfig: {"barrier": BarrierConfig, "units": UnitsConfig, "packet": PacketConfig,
                "grids": GridsConfig, "tolerances": TolerancesConfig, "outputs": OutputsConfig},
    GridsConfig: {"k": KGridConfig, "packet_k": PacketKConfig, "x": XGridConfig,
                  "t": TGridConfig},
}


def parse_config(text: str, strict: bool = False) -> RunConfig:
    """Parse and validate a YAML config, filling defaults."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigError(
                f"YAML parse error at line {mark.line + 1}, column {mark.column + 1}: "
                f"{getattr(exc, 'problem', exc)}"
            ) from exc
        raise ConfigError(f"YAML parse error: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level")
    if "barrier" not in data:
        raise ConfigError("barrier: required section missing")
    if data.get("packet") is None:
        data = {k: v for k, v in data.items() if k != "packet"}
    cfg = _section(RunConfig, data, "", strict)
    _check(cfg)
    return cfg


def _check(cfg: RunConfig) -> None:
    try:
        cfg.barrier.spec()
    except PotentialError as exc:
        raise ConfigError(f"barrier: {exc}") from exc
    k = cfg.grids.k
    if k.stop < k.start:
        raise ConfigError("grids.k.stop: must be >= grids.k.start")
    t = cfg.grids.t
    if t.stop < t.start:
        raise ConfigError("grids.t.stop: must be >= grids.t.start")


def to_dict(cfg) -> dict:
    """Plain nested dict (lists for tuples) suitable for YAML or JSON."""
    def plain(v):
        if dataclasses.is_dataclass(v):
            return {f.name: plain(getattr(v, f.name)) for f in fields(v)}
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v
    out = plain(cfg)
    if out.get("packet") is None:
        out.pop("packet", None)
    return out


def emit_config(cfg: RunConfig) -> str:
    """Fully resolved config as YAML; ``parse_config`` inverts it exactly."""
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def load_config(path, strict: bool = False) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), strict)


__all__ = [
    "BarrierConfig", "ConfigError", "GridsConfig", "KGridConfig", "OutputsConfig",
    "PacketConfig", "PacketKConfig", "RunConfig", "TGridConfig", "TolerancesConfig",
    "XGridConfig", "emit_config", "load_config", "parse_config", "to_dict",
]
