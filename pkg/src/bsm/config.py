"""Pipeline configuration and its JSON file form."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

from .descriptor import GENERATOR
from .errors import FormatError

DEFAULT_SEED = 20120917


@dataclass(frozen=True)
class BsmConfig:
    n: int = 4096
    window: int = 26
    spread: float = 4.0
    seed: int = DEFAULT_SEED
    generator: str = GENERATOR
    d_max: Optional[int] = None
    lambda_c: float = 9.0
    lambda_e: float = 16.0
    lr_tolerance: float = 1.0
    vote_radius: int = 20
    gt_scale: Optional[float] = None
    out_scale: float = 16.0
    threads: int = 1

    def __post_init__(self):
        checks = [
            (self.n >= 1, "n must be >= 1"),
            (self.window >= 2, "window must be >= 2"),
            (self.spread > 0, "spread must be > 0"),
            (self.d_max is None or self.d_max >= 1, "d_max must be >= 1"),
            (self.lambda_c > 0, "lambda_c must be > 0"),
            (self.lambda_e > 0, "lambda_e must be > 0"),
            (self.lr_tolerance >= 0, "lr_tolerance must be >= 0"),
            (self.vote_radius >= 1, "vote_radius must be >= 1"),
            (self.gt_scale is None or self.gt_scale > 0, "gt_scale must be > 0"),
            (self.out_scale > 0, "out_scale must be > 0"),
            (self.threads >= 1, "threads must be >= 1"),
            (self.generator == GENERATOR, f"unsupported generator {self.generator!r}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def replace(self, **changes) -> "BsmConfig":
        return dataclasses.replace(self, **changes)

    def require_d_max(self) -> int:
        if self.d_max is None:
            raise ValueError("d_max is required (it depends on the dataset)")
        return self.d_max

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BsmConfig":
        names = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(d) - set(names)
        if unknown:
            raise FormatError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in d.items():
            if value is None:
                kwargs[key] = None
            elif key in ("n", "window", "seed", "d_max", "vote_radius", "threads"):
                if isinstance(value, bool) or int(value) != value:
                    raise FormatError(f"{key} must be an integer, got {value!r}")
                kwargs[key] = int(value)
            elif key == "generator":
                kwargs[key] = str(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)

    @classmethod
    def loads(cls, text: str) -> "BsmConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise FormatError("config must be a JSON object")
        return cls.from_dict(d)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "BsmConfig":
        with open(path) as fh:
            return cls.loads(fh.read())
