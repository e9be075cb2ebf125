"""Immersion of consolidated batches into the fact store."""

from __future__ import annotations

from ..errors import EmptyBatch
from ..store import AppendReceipt, FactRecord
from .consolidate import Batch


def immerse(batch: Batch, store) -> AppendReceipt:
    """Append a batch atomically. Re-immersing a batch_id is a no-op."""
    if not batch.readings:
        raise EmptyBatch(f"batch {batch.batch_id!r} has no readings")
    if store.has_batch(batch.batch_id):
        return AppendReceipt(0, store.version, {}, batch.batch_id, duplicate=True)
    records = [FactRecord(r.object_id, r.metric, r.ts, r.value, r.quality)
               for r in batch.readings]
    return store.append(records, batch_id=batch.batch_id)
