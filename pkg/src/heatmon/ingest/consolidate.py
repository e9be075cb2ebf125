"""Merging of per-source reading batches into one immersion-ready batch.

Duplicate (object, metric, ts) keys collapse to a single record: the mesh
path wins over cellular, cellular over file imports; among equals the
earliest input batch wins. Gaps longer than one expected sampling
interval are marked with inserted ``quality=missing`` placeholders so
downstream analytics can see the hole without guessing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .normalize import Reading, SOURCES

DEFAULT_INTERVAL = 3600

_PRIORITY = {s: i for i, s in enumerate(SOURCES)}  # mesh > cellular > file


@dataclass
class Batch:
    batch_id: str
    readings: list
    source: str = "mesh"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")


def _content_id(readings) -> str:
    h = hashlib.sha256()
    for r in readings:
        h.update(f"{r.object_id}|{r.metric}|{r.ts}|{r.value!r}|{r.quality}\n".encode())
    return "batch-" + h.hexdigest()[:16]


def consolidate(batches, batch_id: str = None, expected_interval=None) -> Batch:
    """Merge batches (each individually sorted) into one deduplicated batch."""
    interval_for = expected_interval or {}
    if isinstance(interval_for, int):
        default = interval_for
        interval_for = {}
    else:
        default = DEFAULT_INTERVAL

    chosen = {}
    for idx, batch in enumerate(batches):
        rank = (_PRIORITY[batch.source], idx)
        for r in batch.readings:
            k = r.key()
            if k not in chosen or rank < chosen[k][0]:
                chosen[k] = (rank, r)

    readings = sorted((r for _, r in chosen.values()), key=Reading.key)

    filled = []
    prev = None
    for r in readings:
        if prev is not None and (prev.object_id, prev.metric) == (r.object_id, r.metric):
            step = interval_for.get(r.metric, default)
            t = prev.ts + step
            while t < r.ts:
                filled.append(Reading(r.object_id, r.metric, t, 0.0, "missing"))
                t += step
        filled.append(r)
        prev = r
    filled.sort(key=Reading.key)

    sources = [b.source for b in batches if b.readings]
    source = min(sources, key=_PRIORITY.__getitem__) if sources else "file"
    return Batch(batch_id or _content_id(filled), filled, source)
