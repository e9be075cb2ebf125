"""Normalization of raw device batches into canonical readings.

Bad values are never dropped silently: non-finite or out-of-range values
are kept with ``quality=suspect`` (value clamped to 0.0 for non-finite
input, since stored values must stay finite); records with an unknown
device, metric or unit are quarantined with a machine reason so that
``len(raw) == len(readings) + len(rejects)`` always holds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .devices import DeviceMap
from .units import CANONICAL_METRICS, METRIC_RANGES, UnitRegistry

SOURCES = ("mesh", "cellular", "file")


@dataclass(frozen=True)
class RawReading:
    device_id: str
    metric: str
    ts: int
    value: float
    unit: str

    def to_json(self) -> dict:
        return {"device_id": self.device_id, "metric": self.metric,
                "ts": self.ts, "value": self.value, "unit": self.unit}

    @classmethod
    def from_json(cls, obj: dict) -> "RawReading":
        value = obj.get("value")
        value = float("nan") if value is None else float(value)
        return cls(str(obj["device_id"]), str(obj["metric"]), int(obj["ts"]),
                   value, str(obj.get("unit", "")))


@dataclass(frozen=True)
class Reading:
    object_id: str
    metric: str
    ts: int
    value: float
    quality: str = "good"

    def key(self):
        return (self.object_id, self.metric, self.ts)


@dataclass(frozen=True)
class Reject:
    raw: RawReading
    error: str
    message: str

    def to_json(self) -> dict:
        out = self.raw.to_json()
        if not math.isfinite(out["value"]):
            out["value"] = None
        out["error"] = self.error
        out["message"] = self.message
        return out


@dataclass
class NormalizeResult:
    readings: list
    rejects: list = field(default_factory=list)


def normalize(raw, registry: UnitRegistry, device_map: DeviceMap) -> NormalizeResult:
    """Convert raw readings to canonical units and resolve objects."""
    readings = []
    rejects = []
    for rr in raw:
        if rr.device_id not in device_map:
            rejects.append(Reject(rr, "unknown_device", f"device {rr.device_id!r} unmapped"))
            continue
        if rr.metric not in CANONICAL_METRICS:
            rejects.append(Reject(rr, "unknown_metric", f"metric {rr.metric!r} not canonical"))
            continue
        if not registry.knows(rr.metric, rr.unit):
            rejects.append(Reject(rr, "unknown_unit",
                                  f"unit {rr.unit!r} unknown for {rr.metric}"))
            continue
        info = device_map.resolve(rr.device_id)
        if not math.isfinite(rr.value):
            readings.append(Reading(info.object_id, rr.metric, rr.ts, 0.0, "suspect"))
            continue
        value = registry.convert(rr.metric, rr.unit, rr.value)
        lo, hi = METRIC_RANGES[rr.metric]
        quality = "good" if lo <= value <= hi else "suspect"
        readings.append(Reading(info.object_id, rr.metric, rr.ts, value, quality))
    readings.sort(key=Reading.key)
    return NormalizeResult(readings, rejects)


def read_ndjson(path) -> list:
    raw = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                raw.append(RawReading.from_json(json.loads(line)))
    return raw


def write_rejects(rejects, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rej in rejects:
            fh.write(json.dumps(rej.to_json(), sort_keys=True) + "\n")
