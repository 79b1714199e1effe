"""Run configuration: defaults, INI config files and command-line overrides."""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Union

from .nn import ARCHITECTURES

SECTION = "nces"


@dataclass(frozen=True)
class RunConfig:
    kb_path: Optional[str] = None
    out_dir: str = "."
    seed: int = 0
    # synthesizer
    d: int = 40
    L: int = 32
    m: int = 32
    heads: int = 4
    hidden_width: int = 256
    epochs: int = 500
    batch_size: int = 256
    lr: float = 3e-4
    gc: float = 5.0
    architectures: tuple[str, ...] = ("st",)
    ensemble: tuple[str, ...] = ()
    # data
    n: Optional[int] = None  # None: min(|individuals| / 2, 1000)
    ratio: float = 0.9
    max_len: Optional[int] = None  # None: same as L
    budget: int = 1000
    # embeddings
    transe_epochs: int = 100
    transe_lr: float = 0.01
    margin: float = 1.0

    def __post_init__(self):
        positive = ("d", "L", "m", "heads", "hidden_width", "epochs", "batch_size", "lr", "gc",
                    "budget", "transe_lr", "margin")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("n", "max_len"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.transe_epochs < 0 or self.seed < 0:
            raise ValueError("transe_epochs and seed must be non-negative")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie strictly between 0 and 1")
        if not self.architectures:
            raise ValueError("at least one architecture is required")
        for arch in self.architectures + self.ensemble:
            if arch not in ARCHITECTURES:
                raise ValueError(f"unknown architecture {arch!r}; choose from {', '.join(ARCHITECTURES)}")
        if self.max_len is not None and self.max_len > self.L:
            raise ValueError(f"max_len={self.max_len} exceeds L={self.L}")

    @property
    def expression_max_len(self) -> int:
        return self.max_len if self.max_len is not None else self.L

    def to_ini(self) -> str:
        lines = [f"[{SECTION}]"]
        for key, value in asdict(self).items():
            if value is None:
                continue
            if isinstance(value, (tuple, list)):
                value = ",".join(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(name: str, raw: str):
    default = _FIELDS[name].default
    raw = raw.strip()
    if name in ("kb_path", "out_dir"):
        return raw or None
    if name in ("architectures", "ensemble"):
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    if name in ("n", "max_len"):
        return None if raw.lower() in ("", "none", "auto") else int(raw)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def coerce(values: dict) -> dict:
    """Turn string values (from INI files or flags) into typed field values."""
    out = {}
    for key, value in values.items():
        if key not in _FIELDS:
            raise ValueError(f"unknown configuration key {key!r}")
        out[key] = _convert(key, value) if isinstance(value, str) else value
    return out


def read_config(path: Union[str, Path]) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case sensitive ("L")
    text = Path(path).read_text(encoding="utf-8")
    parser.read_string(text, source=str(path))
    if not parser.has_section(SECTION):
        raise ValueError(f"{path}: missing [{SECTION}] section")
    return coerce(dict(parser.items(SECTION)))


def load_config(path: Optional[Union[str, Path]] = None, **overrides) -> RunConfig:
    """Defaults, then the config file, then non-None overrides."""
    values = read_config(path) if path is not None else {}
    values.update(coerce({k: v for k, v in overrides.items() if v is not None}))
    return replace(RunConfig(), **values)
