"""Value types for the fact store and its cached-slice layer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..timegrid import AGGS, GRAINS

QUALITIES = ("good", "interpolated", "suspect", "missing")
QUALITY_CODE = {q: i for i, q in enumerate(QUALITIES)}
Q_GOOD, Q_INTERPOLATED, Q_SUSPECT, Q_MISSING = 0, 1, 2, 3

FORECAST_PREFIX = "forecast."


@dataclass(frozen=True)
class FactRecord:
    """One immutable measurement fact. Primary key: (object_id, metric, ts)."""

    object_id: str
    metric: str
    ts: int
    value: float
    quality: str = "good"

    def key(self) -> tuple:
        return (self.object_id, self.metric, self.ts)


@dataclass(frozen=True)
class Cell:
    """One aggregated cell of a slice.

    ``count`` is the number of non-missing facts folded into the cell;
    missing placeholders contribute to no value and show up as a count
    lower than the bucket's nominal width. ``quality`` is the worst
    quality among the folded facts (good < interpolated < suspect).
    """

    object_id: str
    metric: str
    bucket_ts: int
    value: float
    count: int
    quality: str = "good"


@dataclass(frozen=True)
class SliceSpec:
    """A multidimensional query: objects x metrics x half-open time window.

    ``objects=None`` means ALL objects. ``agg`` is ignored (normalized to
    None) when ``grain`` is raw.
    """

    objects: Optional[frozenset]
    metrics: frozenset
    ts_from: int
    ts_to: int
    grain: str = "raw"
    agg: Optional[str] = "sum"

    def __post_init__(self):
        if self.ts_from >= self.ts_to:
            raise ValueError("ts_from must be < ts_to")
        if not self.metrics:
            raise ValueError("metrics must be non-empty")
        if self.grain not in GRAINS:
            raise ValueError(f"unknown grain: {self.grain!r}")
        if self.grain != "raw" and self.agg not in AGGS:
            raise ValueError(f"unknown agg: {self.agg!r}")

    @classmethod
    def make(cls, objects, metrics, ts_from, ts_to, grain="raw", agg="sum"):
        objs = None if objects is None else frozenset(objects)
        return cls(objs, frozenset(metrics), int(ts_from), int(ts_to), grain, agg)

    def canonical(self) -> "SliceSpec":
        if self.grain == "raw" and self.agg is not None:
            return SliceSpec(self.objects, self.metrics, self.ts_from, self.ts_to, "raw", None)
        return self

    def cache_key(self) -> tuple:
        c = self.canonical()
        objs = None if c.objects is None else tuple(sorted(c.objects))
        return (objs, tuple(sorted(c.metrics)), c.ts_from, c.ts_to, c.grain, c.agg)

    def touches(self, object_ids, ts_from: int, ts_to: int) -> bool:
        """Window/object overlap test used for cache invalidation."""
        if self.ts_to <= ts_from or ts_to <= self.ts_from:
            return False
        if self.objects is None or object_ids is None:
            return True
        return bool(self.objects & frozenset(object_ids))


@dataclass(frozen=True)
class Block:
    """One checksummed chunk of an encoded cell/fact run."""

    block_id: str
    byte_len: int
    checksum: str
    payload: bytes


@dataclass
class Slice:
    """An immutable answer to a SliceSpec, block-packed for the cache layer."""

    spec: SliceSpec
    cells: list
    blocks: list
    version: int


@dataclass
class AppendReceipt:
    count: int
    store_version: int
    high_water: dict = field(default_factory=dict)
    batch_id: Optional[str] = None
    duplicate: bool = False
