"""Structured verification output shared by every command."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

from .jsonio import dumps


@dataclass
class Check:
    name: str
    value: Any
    threshold: Any
    passed: bool
    relation: str = "<"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "relation": self.relation,
            "pass": bool(self.passed),
        }


@dataclass
class ReportDocument:
    command: str
    inputs: dict = field(default_factory=dict)
    convention: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    wall_time: float | None = None

    def add(self, name: str, value, threshold, relation: str = "<") -> Check:
        """Record a check; ``relation`` is one of ``< <= > >= == finite bool``."""
        ok = _compare(value, threshold, relation)
        c = Check(name, value, threshold, ok, relation)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def digest(self) -> str:
        blob = json.dumps(self.inputs, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def merge(self, other: "ReportDocument", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.value, c.threshold, c.passed, c.relation))
        if other.data:
            self.data[prefix.rstrip(".:/") or other.command] = other.data

    def to_json(self) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "inputs_digest": self.digest(),
            "convention": self.convention,
            "checks": [c.to_json() for c in self.checks],
            "data": self.data,
            "pass": self.passed,
        }
        if self.wall_time is not None:
            out["wall_time_s"] = round(self.wall_time, 3)
        return out

    def dumps(self) -> str:
        return dumps(self.to_json())


def _compare(value, threshold, relation: str) -> bool:
    import math

    if relation == "bool":
        return bool(value)
    if relation == "finite":
        return value is not None and math.isfinite(float(value))
    if value is None:
        return False
    v = float(value)
    if math.isnan(v):
        return False
    t = float(threshold)
    return {
        "<": v < t,
        "<=": v <= t,
        ">": v > t,
        ">=": v >= t,
        "==": v == t,
    }[relation]
