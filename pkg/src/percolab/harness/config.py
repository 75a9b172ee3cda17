"""Experiment configuration and its flat ``key = value`` file format.

Keys are the field names below, except that the intensity is written
``lambda`` (``lam`` in Python).  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from typing import Mapping, Optional

from ..pointproc import parse_seed

DEFAULT_POINT_CAP = 1e7
OUTPUT_DIR_ENV = "PERCOLAB_OUTPUT_DIR"


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = 2
    n: float = 40.0
    lam: float = 2.0
    r: float = 1.0
    theta: float = 4.0
    reps: int = 100
    master_seed: int = 0
    compute_local: bool = True
    compute_e3: bool = True
    oracle_check: bool = False
    parallelism: Optional[int] = 1  # None means one worker per CPU
    point_cap: float = DEFAULT_POINT_CAP

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m!r}")
        if not self.n > 1:
            raise ValueError(f"n must exceed 1 (so that ln n > 0), got {self.n!r}")
        for name in ("lam", "r", "theta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and v != float("inf")):
                raise ValueError(f"{name} must be a finite positive number, got {v!r}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError(f"reps must be a positive integer, got {self.reps!r}")
        if self.parallelism is not None and (int(self.parallelism) != self.parallelism or self.parallelism < 1):
            raise ValueError(f"parallelism must be a positive integer or auto, got {self.parallelism!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "n", float(self.n))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "master_seed", parse_seed(self.master_seed))

    @property
    def expected_points(self) -> float:
        return self.lam * self.n**self.m

    @property
    def workers(self) -> int:
        return self.parallelism or (os.cpu_count() or 1)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            key = "lambda" if f.name == "lam" else f.name
            if f.name == "master_seed":
                text = f"{v:#x}"
            elif f.name == "parallelism" and v is None:
                text = "auto"
            elif isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    def echo(self) -> dict:
        d = {("lambda" if k == "lam" else k): v for k, v in dataclasses.asdict(self).items()}
        d["master_seed"] = f"{self.master_seed:#x}"
        return d


_BOOL = {"true": True, "1": True, "yes": True, "on": True,
         "false": False, "0": False, "no": False, "off": False}


def _convert(name: str, text: str):
    text = text.strip()
    if name in ("m", "reps"):
        return int(text)
    if name in ("n", "lam", "r", "theta", "point_cap"):
        return float(text)
    if name == "master_seed":
        return parse_seed(text)
    if name == "parallelism":
        return None if text.lower() in ("auto", "max", "0") else int(text)
    if name in ("compute_local", "compute_e3", "oracle_check"):
        try:
            return _BOOL[text.lower()]
        except KeyError:
            raise ValueError(f"{name} must be a boolean, got {text!r}") from None
    raise KeyError(name)


FIELD_NAMES = tuple("lambda" if f.name == "lam" else f.name for f in dataclasses.fields(ExperimentConfig))


def _attr(key: str) -> str:
    key = key.strip().replace("-", "_")
    if key == "seed":
        key = "master_seed"
    if key == "lambda":
        return "lam"
    if key not in {f.name for f in dataclasses.fields(ExperimentConfig)}:
        raise ValueError(f"unknown config key {key!r}")
    return key


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        name = _attr(key)
        values[name] = _convert(name, value)
    return values


def load_config(path=None, overrides: Optional[Mapping] = None) -> ExperimentConfig:
    """Read a config file (if any) and apply ``overrides`` on top."""
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    for key, v in (overrides or {}).items():
        if v is None:
            continue
        name = _attr(key)
        values[name] = _convert(name, v) if isinstance(v, str) else v
    return ExperimentConfig(**values)


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, "percolab-out")
