"""LRU cache of computed slices, keyed by exact canonical spec.

Capacity is counted in encoded bytes across all cached slices. Entries
also know which blocks/nodes hold their packed form so the store can
remove the on-disk copies on eviction or invalidation.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

DEFAULT_CACHE_CAPACITY = 256 * 1024 * 1024  # 256 MiB


@dataclass
class CacheEntry:
    slice_: object
    byte_len: int
    block_nodes: dict = field(default_factory=dict)  # block_id -> [node_id]


class SliceCache:
    def __init__(self, capacity_bytes: int = DEFAULT_CACHE_CAPACITY):
        self.capacity = capacity_bytes
        self._entries: OrderedDict = OrderedDict()
        self._bytes = 0
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._entries)

    @property
    def used_bytes(self):
        return self._bytes

    def get(self, key):
        entry = self._entries.get(key)
        if entry is None:
            self.misses += 1
            return None
        self._entries.move_to_end(key)
        self.hits += 1
        return entry

    def put(self, key, entry: CacheEntry):
        """Insert an entry; returns entries evicted to stay within capacity."""
        if key in self._entries:
            old = self._entries.pop(key)
            self._bytes -= old.byte_len
        self._entries[key] = entry
        self._bytes += entry.byte_len
        evicted = []
        while self._bytes > self.capacity and len(self._entries) > 1:
            k, old = self._entries.popitem(last=False)
            if k == key:
                self._entries[k] = old  # never evict what we just inserted
                break
            self._bytes -= old.byte_len
            evicted.append(old)
        return evicted

    def drop(self, key):
        entry = self._entries.pop(key, None)
        if entry is not None:
            self._bytes -= entry.byte_len
        return entry

    def invalidate(self, object_ids, ts_from: int, ts_to: int):
        """Drop every cached slice overlapping objects x window; return entries."""
        dropped = []
        for key in list(self._entries):
            spec = self._entries[key].slice_.spec
            if spec.touches(object_ids, ts_from, ts_to):
                dropped.append(self.drop(key))
        return dropped

    def clear(self):
        dropped = list(self._entries.values())
        self._entries.clear()
        self._bytes = 0
        return dropped

    def entries(self):
        return list(self._entries.values())
