"""Run configuration with the deployed defaults."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping, Optional


@dataclass(frozen=True)
class Config:
    sample_rate: float = 200.0
    K: float = 0.75
    segment_len: int = 10
    min_valid_bits: int = 140
    key_len: int = 128
    rate_threshold: float = 70.0
    window_duration: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.min_valid_bits < self.key_len:
            raise ValueError("min_valid_bits must be at least key_len")
        if self.key_len != 128:
            raise ValueError("only 128-bit keys are supported")
        if not (self.sample_rate > 0 and self.K > 0 and self.window_duration > 0):
            raise ValueError("sample_rate, K and window_duration must be positive")
        if self.segment_len < 2:
            raise ValueError("segment_len must be at least 2")

    def merged(self, overrides: Mapping[str, Any]) -> "Config":
        """Return a copy with the non-None entries of ``overrides`` applied."""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides) -> "Config":
        """Defaults, then the JSON file at ``path``, then ``overrides``."""
        cfg = cls()
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                cfg = cfg.merged(json.load(fh))
        return cfg.merged(overrides)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)
