"""Append-only multidimensional fact store with a cached-slice layer.

Facts are immutable and keyed by (object_id, metric, ts). Appends are
packed into checksummed blocks, replicated onto ``replication`` simulated
storage nodes chosen by rendezvous hashing, and indexed in memory for
querying. Slices are aggregated answers to multidimensional specs; they
are cached (exact-spec keying, LRU by bytes) and their packed blocks are
also placed on the node cluster, so node failures degrade the cache the
same way they degrade facts.

Two reserved behaviours relax strict write-once semantics without ever
mutating a stored record:

* ``forecast.*`` metrics are last-writer-wins per (object, metric, ts) —
  repeated forecasting must be able to supersede earlier predictions;
* a real value may supersede a ``missing`` placeholder at the same key
  (late data arriving over the fallback channel), and an incoming
  placeholder never displaces an existing value.

Supersession appends a new record; queries resolve to the newest one.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import KeyConflict, QuorumUnavailable, UnknownNode
from ..timegrid import bucket_starts
from . import blocks as blk
from .cache import DEFAULT_CACHE_CAPACITY, CacheEntry, SliceCache
from .nodes import StorageNode
from .placement import place
from .records import (
    AppendReceipt,
    Cell,
    FactRecord,
    FORECAST_PREFIX,
    QUALITIES,
    Q_MISSING,
    Slice,
    SliceSpec,
)

META_VERSION = 1


@dataclass
class _Series:
    ts: np.ndarray
    value: np.ndarray
    quality: np.ndarray
    seq: np.ndarray
    needs_dedupe: bool = False


@dataclass
class _Group:
    group_id: str
    version: int
    block_ids: list
    coverage: dict          # {"objects": [...], "metrics": [...], "ts_min": int, "ts_max": int}
    count: int
    batch_id: str = None
    damaged: bool = False


@dataclass
class _BlockMeta:
    block_id: str
    checksum: str
    group_id: str           # fact group, or None for slice blocks
    kind: str               # "facts" | "slice"
    holders: tuple


@dataclass
class ClusterState:
    nodes: tuple
    failed: tuple
    replication: int
    repaired: list = field(default_factory=list)
    unrepaired: list = field(default_factory=list)

    @property
    def live(self):
        return tuple(n for n in self.nodes if n not in self.failed)


@dataclass
class AuditReport:
    ok: bool
    blocks_checked: int
    violations: list

    def to_dict(self):
        return {"ok": self.ok, "blocks_checked": self.blocks_checked, "violations": self.violations}


class CubeStore:
    def __init__(self, path, node_count: int = 3, replication: int = 2,
                 block_size_limit: int = blk.DEFAULT_BLOCK_SIZE_LIMIT,
                 cache_capacity: int = DEFAULT_CACHE_CAPACITY):
        self.path = Path(path)
        self._lock = threading.RLock()
        self._meta_path = self.path / "meta.json"
        if self._meta_path.exists():
            meta = json.loads(self._meta_path.read_text())
            node_count = meta["node_count"]
            replication = meta["replication"]
            block_size_limit = meta["block_size_limit"]
        if replication < 1 or replication > node_count:
            raise ValueError("need 1 <= replication <= node_count")
        self.replication = replication
        self.block_size_limit = block_size_limit
        self.node_ids = tuple(f"node-{i}" for i in range(node_count))
        self._nodes = {nid: StorageNode(self.path / "nodes" / nid, nid) for nid in self.node_ids}
        self._failed = set()
        self._version = 0
        self._slice_seq = 0
        self._series = {}        # (object_id, metric) -> _Series
        self._groups = {}        # group_id -> _Group
        self._block_meta = {}    # block_id -> _BlockMeta
        self._batch_ids = {}     # batch_id -> AppendReceipt
        self._cache = SliceCache(cache_capacity)
        self._load()

    # --- lifecycle --------------------------------------------------------

    def _load(self):
        cluster_path = self.path / "cluster.json"
        if cluster_path.exists():
            state = json.loads(cluster_path.read_text())
            self._failed = set(state.get("failed", ()))
            self._version = int(state.get("version", 0))
        pending = {}   # group_id -> {seq: (block_id, payload_ok, payload)}
        for nid in self.node_ids:
            node = self._nodes[nid]
            node.clear_cache_blocks()  # slice cache is cold after reopen
            for header, payload in node.scan_log(with_payload=True):
                bid = header["block_id"]
                meta = self._block_meta.get(bid)
                if meta is None:
                    meta = _BlockMeta(bid, header["checksum"], header["group"], "facts", (nid,))
                    self._block_meta[bid] = meta
                elif nid not in meta.holders:
                    meta.holders = meta.holders + (nid,)
                gid = header["group"]
                if gid not in self._groups:
                    self._groups[gid] = _Group(
                        group_id=gid,
                        version=header["version"],
                        block_ids=[],
                        coverage=header.get("coverage") or {},
                        count=header.get("count", 0),
                        batch_id=header.get("batch_id"),
                    )
                grp = self._groups[gid]
                if header.get("coverage"):
                    grp.coverage = header["coverage"]
                    grp.count = header.get("count", grp.count)
                    grp.batch_id = header.get("batch_id", grp.batch_id)
                slot = pending.setdefault(gid, {})
                have = slot.get(header["seq"])
                if have is None or not have[1]:
                    ok = blk.checksum(payload) == header["checksum"]
                    slot[header["seq"]] = (bid, ok, payload if ok else None, header["n"])
        for gid, slot in sorted(pending.items(), key=lambda kv: self._groups[kv[0]].version):
            grp = self._groups[gid]
            n = next(iter(slot.values()))[3]
            grp.block_ids = [slot[s][0] for s in sorted(slot)]
            if len(slot) < n or not all(slot[s][1] for s in slot):
                grp.damaged = True
                continue
            payload = b"".join(slot[s][2] for s in sorted(slot))
            records = blk.decode_facts(payload)
            self._index_records(records, grp.version)
            if grp.batch_id:
                self._batch_ids.setdefault(grp.batch_id, None)
            self._version = max(self._version, grp.version)
        self._write_meta()

    def _write_meta(self):
        self.path.mkdir(parents=True, exist_ok=True)
        if not self._meta_path.exists():
            self._meta_path.write_text(json.dumps({
                "format": META_VERSION,
                "node_count": len(self.node_ids),
                "replication": self.replication,
                "block_size_limit": self.block_size_limit,
            }, indent=2))
        self._write_cluster_state()

    def _write_cluster_state(self):
        (self.path / "cluster.json").write_text(json.dumps({
            "nodes": list(self.node_ids),
            "failed": sorted(self._failed),
            "version": self._version,
        }, indent=2))

    # --- basic introspection ----------------------------------------------

    @property
    def version(self) -> int:
        return self._version

    def live_nodes(self):
        return [n for n in self.node_ids if n not in self._failed]

    def cluster_state(self) -> ClusterState:
        return ClusterState(self.node_ids, tuple(sorted(self._failed)), self.replication)

    def objects(self):
        return sorted({o for (o, m) in self._series if not m.startswith(FORECAST_PREFIX)})

    def metrics(self):
        return sorted({m for (_, m) in self._series})

    def series_bounds(self, object_id, metric):
        s = self._series.get((object_id, metric))
        if s is None or len(s.ts) == 0:
            return None
        return int(s.ts[0]), int(s.ts[-1])

    def has_batch(self, batch_id: str) -> bool:
        return batch_id in self._batch_ids

    def cache_stats(self):
        return {"entries": len(self._cache), "bytes": self._cache.used_bytes,
                "hits": self._cache.hits, "misses": self._cache.misses}

    # --- append -------------------------------------------------------------

    def append(self, records, batch_id: str = None) -> AppendReceipt:
        """Append facts atomically; records are durable on r nodes on return."""
        records = list(records)
        with self._lock:
            live = self.live_nodes()
            if len(live) < self.replication:
                raise QuorumUnavailable(
                    f"{len(live)} live nodes < replication factor {self.replication}")
            survivors = self._validate_batch(records)
            version = self._version + 1
            group_id = f"g{version:08d}"
            if survivors:
                survivors.sort(key=lambda r: (r.object_id, r.metric, r.ts))
                payload = blk.encode_facts(survivors)
                group_blocks = blk.chunk_payload(payload, self.block_size_limit, group_id)
                coverage = {
                    "objects": sorted({r.object_id for r in survivors}),
                    "metrics": sorted({r.metric for r in survivors}),
                    "ts_min": min(r.ts for r in survivors),
                    "ts_max": max(r.ts for r in survivors),
                }
                for i, b in enumerate(group_blocks):
                    header = {
                        "block_id": b.block_id, "checksum": b.checksum,
                        "group": group_id, "seq": i, "n": len(group_blocks),
                        "kind": "facts", "version": version,
                    }
                    if i == 0:
                        header["coverage"] = coverage
                        header["count"] = len(survivors)
                        header["batch_id"] = batch_id
                    holders = place(b.block_id, live, self.replication)
                    for nid in holders:
                        self._nodes[nid].append_log_block(header, b.payload)
                    self._block_meta[b.block_id] = _BlockMeta(
                        b.block_id, b.checksum, group_id, "facts", tuple(holders))
                self._groups[group_id] = _Group(
                    group_id, version, [b.block_id for b in group_blocks],
                    coverage, len(survivors), batch_id)
                self._index_records(survivors, version)
            self._version = version
            self._write_cluster_state()
            if batch_id is not None:
                self._batch_ids[batch_id] = None
            high_water = {}
            for r in records:
                if r.ts > high_water.get(r.object_id, -1):
                    high_water[r.object_id] = r.ts
            if records:
                self.invalidate_cache({r.object_id for r in records},
                                      min(r.ts for r in records),
                                      max(r.ts for r in records) + 1)
            return AppendReceipt(len(records), self._version, high_water, batch_id)

    def _validate_batch(self, records):
        """Enforce unique keys and write-once semantics; returns records to write."""
        seen = {}
        for r in records:
            if not np.isfinite(r.value):
                raise ValueError(f"non-finite value for {r.key()}")
            k = r.key()
            prev = seen.get(k)
            if prev is not None and (prev.value != r.value or prev.quality != r.quality):
                raise KeyConflict(f"duplicate key with differing value in batch: {k}")
            seen[k] = r
        survivors = []
        by_series = {}
        for r in seen.values():
            by_series.setdefault((r.object_id, r.metric), []).append(r)
        for (o, m), recs in by_series.items():
            series = self._series.get((o, m))
            lww = m.startswith(FORECAST_PREFIX)
            if series is None or len(series.ts) == 0:
                survivors.extend(recs)
                continue
            new_ts = np.array([r.ts for r in recs], dtype=np.int64)
            idx = np.searchsorted(series.ts, new_ts)
            for r, i in zip(recs, idx):
                j = self._latest_at(series, int(i), r.ts)
                if j is None:
                    survivors.append(r)
                    continue
                old_val = float(series.value[j])
                old_q = int(series.quality[j])
                if r.quality == "missing":
                    continue  # placeholder never displaces an existing record
                if lww or old_q == Q_MISSING:
                    survivors.append(r)   # supersedes; resolved at query time
                    continue
                if old_val == r.value and QUALITIES[old_q] == r.quality:
                    continue  # identical duplicate, idempotent
                raise KeyConflict(
                    f"({o}, {m}, {r.ts}) already stored with value {old_val!r}")
        return survivors

    @staticmethod
    def _latest_at(series: _Series, i: int, ts: int):
        """Index of the newest stored record at ts, or None."""
        j = None
        k = i
        while k < len(series.ts) and series.ts[k] == ts:
            if j is None or series.seq[k] >= series.seq[j]:
                j = k
            k += 1
        return j

    def _index_records(self, records, seq: int):
        by_series = {}
        for r in records:
            by_series.setdefault((r.object_id, r.metric), []).append(r)
        for key, recs in by_series.items():
            ts = np.array([r.ts for r in recs], dtype=np.int64)
            value = np.array([r.value for r in recs], dtype=np.float64)
            quality = np.array([QUALITIES.index(r.quality) for r in recs], dtype=np.int8)
            seqs = np.full(len(recs), seq, dtype=np.int64)
            order = np.argsort(ts, kind="stable")
            ts, value, quality, seqs = ts[order], value[order], quality[order], seqs[order]
            series = self._series.get(key)
            if series is None:
                dup = bool(len(ts) > 1 and (np.diff(ts) == 0).any())
                self._series[key] = _Series(ts, value, quality, seqs, dup)
                continue
            if len(series.ts) and ts[0] > series.ts[-1]:
                merged_ts = np.concatenate([series.ts, ts])
                merged_v = np.concatenate([series.value, value])
                merged_q = np.concatenate([series.quality, quality])
                merged_s = np.concatenate([series.seq, seqs])
            else:
                merged_ts = np.concatenate([series.ts, ts])
                order = np.lexsort((np.concatenate([series.seq, seqs]), merged_ts))
                merged_v = np.concatenate([series.value, value])[order]
                merged_q = np.concatenate([series.quality, quality])[order]
                merged_s = np.concatenate([series.seq, seqs])[order]
                merged_ts = merged_ts[order]
            dup = series.needs_dedupe or bool((np.diff(merged_ts) == 0).any())
            self._series[key] = _Series(merged_ts, merged_v, merged_q, merged_s, dup)

    # --- queries ------------------------------------------------------------

    def query_slice(self, spec: SliceSpec) -> Slice:
        """Cached-slice read: consult the cache, else compute, pack and cache.

        Fact availability is gated before the cache is consulted: a hit
        must be indistinguishable from recomputation, so a query whose
        underlying fact blocks are dark fails either way.
        """
        with self._lock:
            spec = spec.canonical()
            self._check_fact_availability(spec)
            key = spec.cache_key()
            entry = self._cache.get(key)
            if entry is not None:
                if self._blocks_available(entry.block_nodes):
                    return entry.slice_
                self._drop_cache_entry(entry)
            cells = self._aggregate(spec)
            slice_ = self._pack_and_cache(spec, cells, key)
            return slice_

    def recompute_slice(self, spec: SliceSpec) -> Slice:
        """Bypass-cache recomputation from the fact table (cache untouched)."""
        with self._lock:
            spec = spec.canonical()
            self._check_fact_availability(spec)
            cells = self._aggregate(spec)
            payload = blk.encode_cells(cells)
            bs = blk.chunk_payload(payload, self.block_size_limit, "scratch") if payload else []
            return Slice(spec, cells, bs, self._version)

    def _pack_and_cache(self, spec, cells, key):
        payload = blk.encode_cells(cells)
        live = self.live_nodes()
        self._slice_seq += 1
        prefix = f"s{self._version:08d}-{self._slice_seq:06d}"
        group_blocks = blk.chunk_payload(payload, self.block_size_limit, prefix) if payload else []
        slice_ = Slice(spec, cells, group_blocks, self._version)
        if len(live) < self.replication:
            return slice_  # degraded: serve without caching
        if len(payload) > self._cache.capacity:
            return slice_  # larger than the whole cache budget: never cached
        block_nodes = {}
        for b in group_blocks:
            holders = place(b.block_id, live, self.replication)
            for nid in holders:
                self._nodes[nid].write_cache_block(b.block_id, b.payload)
            self._block_meta[b.block_id] = _BlockMeta(b.block_id, b.checksum, None, "slice", tuple(holders))
            block_nodes[b.block_id] = list(holders)
        evicted = self._cache.put(key, CacheEntry(slice_, len(payload), block_nodes))
        for entry in evicted:
            self._drop_cache_entry(entry)
        return slice_

    def _drop_cache_entry(self, entry: CacheEntry):
        for bid, holders in entry.block_nodes.items():
            for nid in holders:
                if nid not in self._failed:
                    self._nodes[nid].delete_cache_block(bid)
            self._block_meta.pop(bid, None)
        key = entry.slice_.spec.cache_key()
        self._cache.drop(key)

    def _blocks_available(self, block_nodes: dict) -> bool:
        for holders in block_nodes.values():
            if not any(n not in self._failed for n in holders):
                return False
        return True

    def _check_fact_availability(self, spec: SliceSpec):
        """Every fact group overlapping the spec must be fully readable."""
        for grp in self._groups.values():
            cov = grp.coverage
            if not cov:
                continue
            if cov["ts_max"] < spec.ts_from or cov["ts_min"] >= spec.ts_to:
                continue
            if not (spec.metrics & set(cov["metrics"])):
                continue
            if spec.objects is not None and not (spec.objects & set(cov["objects"])):
                continue
            if grp.damaged:
                raise QuorumUnavailable(f"fact group {grp.group_id} is damaged")
            for bid in grp.block_ids:
                meta = self._block_meta[bid]
                if not any(n not in self._failed for n in meta.holders):
                    raise QuorumUnavailable(
                        f"no live replica for block {bid} (group {grp.group_id})")

    def _aggregate(self, spec: SliceSpec):
        objects = sorted(spec.objects) if spec.objects is not None else self._all_objects_any_metric(spec.metrics)
        metrics = sorted(spec.metrics)
        cells = []
        for o in objects:
            for m in metrics:
                series = self._series.get((o, m))
                if series is None:
                    continue
                i0 = int(np.searchsorted(series.ts, spec.ts_from, side="left"))
                i1 = int(np.searchsorted(series.ts, spec.ts_to, side="left"))
                if i0 >= i1:
                    continue
                ts = series.ts[i0:i1]
                value = series.value[i0:i1]
                quality = series.quality[i0:i1]
                if series.needs_dedupe:
                    ts, value, quality = self._dedupe(ts, value, quality, series.seq[i0:i1])
                keep = quality != Q_MISSING
                if not keep.all():
                    ts, value, quality = ts[keep], value[keep], quality[keep]
                if len(ts) == 0:
                    continue
                if spec.grain == "raw":
                    cells.extend(
                        Cell(o, m, int(t), float(v), 1, QUALITIES[q])
                        for t, v, q in zip(ts, value, quality))
                    continue
                buckets = bucket_starts(ts, spec.grain)
                starts = np.flatnonzero(np.r_[True, np.diff(buckets) != 0])
                counts = np.diff(np.r_[starts, len(buckets)])
                if spec.agg == "sum":
                    agg = np.add.reduceat(value, starts)
                elif spec.agg == "mean":
                    agg = np.add.reduceat(value, starts) / counts
                elif spec.agg == "min":
                    agg = np.minimum.reduceat(value, starts)
                else:
                    agg = np.maximum.reduceat(value, starts)
                worst = np.maximum.reduceat(quality, starts)
                cells.extend(
                    Cell(o, m, int(b), float(v), int(c), QUALITIES[int(q)])
                    for b, v, c, q in zip(buckets[starts], agg, counts, worst))
        return cells

    def _all_objects_any_metric(self, metrics):
        return sorted({o for (o, m) in self._series if m in metrics})

    @staticmethod
    def _dedupe(ts, value, quality, seq):
        """Keep the newest (max seq) record per timestamp."""
        order = np.lexsort((seq, ts))
        ts, value, quality = ts[order], value[order], quality[order]
        last = np.r_[ts[1:] != ts[:-1], True]
        return ts[last], value[last], quality[last]

    # --- cache invalidation ---------------------------------------------------

    def invalidate_cache(self, object_ids, ts_from: int, ts_to: int) -> int:
        """Drop every cached slice overlapping objects x [ts_from, ts_to)."""
        with self._lock:
            dropped = self._cache.invalidate(object_ids, ts_from, ts_to)
            for entry in dropped:
                for bid, holders in entry.block_nodes.items():
                    for nid in holders:
                        if nid not in self._failed:
                            self._nodes[nid].delete_cache_block(bid)
                    self._block_meta.pop(bid, None)
            return len(dropped)

    # --- fault model ------------------------------------------------------------

    def fail_node(self, node_id: str) -> ClusterState:
        with self._lock:
            if node_id not in self._nodes:
                raise UnknownNode(node_id)
            self._failed.add(node_id)
            self._write_cluster_state()
            return self.cluster_state()

    def recover_node(self, node_id: str) -> ClusterState:
        """Bring a node back and re-replicate any replica it lost or corrupted."""
        with self._lock:
            if node_id not in self._nodes:
                raise UnknownNode(node_id)
            self._failed.discard(node_id)
            state = self.cluster_state()
            node = self._nodes[node_id]
            for bid, meta in sorted(self._block_meta.items()):
                if node_id not in meta.holders:
                    continue
                if node.verify_block(bid, meta.checksum):
                    continue
                donor_bytes = self._read_good_copy(meta, exclude=node_id)
                if donor_bytes is None:
                    state.unrepaired.append(bid)
                    continue
                if meta.kind == "slice":
                    node.write_cache_block(bid, donor_bytes)
                else:
                    grp = self._groups[meta.group_id]
                    header = {
                        "block_id": bid, "checksum": meta.checksum,
                        "group": meta.group_id, "seq": grp.block_ids.index(bid),
                        "n": len(grp.block_ids), "kind": "facts", "version": grp.version,
                    }
                    node.append_log_block(header, donor_bytes)
                state.repaired.append(bid)
            self._write_cluster_state()
            return state

    def _read_good_copy(self, meta: _BlockMeta, exclude=None):
        for nid in meta.holders:
            if nid == exclude or nid in self._failed:
                continue
            data = self._nodes[nid].read_block(meta.block_id)
            if data is not None and blk.checksum(data) == meta.checksum:
                return data
        return None

    # --- audit --------------------------------------------------------------

    def audit(self) -> AuditReport:
        """Verify replica counts and every live replica's checksum."""
        with self._lock:
            violations = []
            for bid, meta in sorted(self._block_meta.items()):
                if len(set(meta.holders)) != self.replication:
                    violations.append({"block_id": bid, "node_id": None,
                                       "reason": "replica_count",
                                       "detail": f"{len(set(meta.holders))} != r={self.replication}"})
                for nid in meta.holders:
                    if nid in self._failed:
                        violations.append({"block_id": bid, "node_id": nid,
                                           "reason": "replica_on_failed_node"})
                        continue
                    data = self._nodes[nid].read_block(bid)
                    if data is None:
                        violations.append({"block_id": bid, "node_id": nid,
                                           "reason": "missing_replica"})
                    elif blk.checksum(data) != meta.checksum:
                        violations.append({"block_id": bid, "node_id": nid,
                                           "reason": "checksum_mismatch"})
            return AuditReport(not violations, len(self._block_meta), violations)
