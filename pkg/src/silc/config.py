"""Analysis configuration, loadable from a JSON file."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from .isl import BUG_KINDS, MEMLEAK, NOLEAK, NPD, STOP, UAF

DEFAULT_PROTOCOLS = {NPD: STOP, MEMLEAK: NOLEAK, UAF: STOP}
DEFAULT_ERROR_RETURNS = {"int": "0", "ptr": "NULL"}
KNOWN_KEYS = {"bugs", "protocols", "error_returns", "unroll_bound", "max_disjuncts", "seed"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    bugs: Tuple[str, ...] = BUG_KINDS
    protocols: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_PROTOCOLS))
    error_returns: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_ERROR_RETURNS))
    unroll_bound: int = 2
    max_disjuncts: int = 64
    seed: Optional[int] = None

    def __post_init__(self):
        for b in self.bugs:
            if b not in BUG_KINDS:
                raise ConfigError(f"unknown bug kind {b!r}")
        for b, p in self.protocols.items():
            if p not in (STOP, NOLEAK):
                raise ConfigError(f"unknown protocol {p!r} for {b}")
        if self.unroll_bound < 0 or self.max_disjuncts < 1:
            raise ConfigError("unroll_bound must be >= 0 and max_disjuncts >= 1")

    def protocol(self, kind: str) -> str:
        return self.protocols.get(kind, DEFAULT_PROTOCOLS[kind])

    def error_return(self, type_kind: str) -> Optional[str]:
        if type_kind == "void":
            return None
        key = "ptr" if type_kind in ("ptr", "struct") else type_kind
        return self.error_returns.get(key, DEFAULT_ERROR_RETURNS.get(key, "0"))

    def to_json(self) -> dict:
        d = asdict(self)
        d["bugs"] = list(self.bugs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        unknown = set(d) - KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        if "bugs" in kw:
            kw["bugs"] = tuple(kw["bugs"])
        if "protocols" in kw:
            kw["protocols"] = {**DEFAULT_PROTOCOLS, **kw["protocols"]}
        if "error_returns" in kw:
            kw["error_returns"] = {**DEFAULT_ERROR_RETURNS, **kw["error_returns"]}
        return cls(**kw)

    def merged(self, d: dict) -> "AnalysisConfig":
        base = self.to_json()
        for k, v in d.items():
            if isinstance(v, dict) and isinstance(base.get(k), dict):
                base[k] = {**base[k], **v}
            else:
                base[k] = v
        return AnalysisConfig.from_dict(base)


def load_config(path) -> AnalysisConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return AnalysisConfig.from_dict(data)
