"""Deterministic in-process map-reduce over slice cells.

The master partitions the input cells across a pool of logical workers;
each worker maps its part independently; pairs are then grouped by key
and each group is folded by a registered reduce function. Group folds
run left-to-right over values in input-cell order, so the result is
bit-identical for any worker count — a sequential single-pass fold is
the reference semantics, the pool is just machinery.

Reduce functions must be associative and commutative; registration
property-checks 1000 random integer-valued triples (exact in float64),
which catches the classic offenders such as subtraction.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DuplicateName, NonAssociativeReduce, UnknownFunction
from .store import SliceSpec

_REDUCES: dict = {}
_MAPS: dict = {}


def register_reduce(name: str, fn: Callable[[float, float], float], triples: int = 1000):
    """Register a binary fold; rejects non-associative/non-commutative ones."""
    if name in _REDUCES:
        raise DuplicateName(f"reduce {name!r} already registered")
    rng = np.random.default_rng(np.random.SeedSequence([8131, triples]))
    samples = rng.integers(-1000, 1000, size=(triples, 3)).astype(np.float64)
    for a, b, c in samples:
        left = fn(fn(a, b), c)
        right = fn(a, fn(b, c))
        if left != right:
            raise NonAssociativeReduce(
                f"{name!r} is not associative: f(f({a},{b}),{c})={left} != {right}")
        if fn(a, b) != fn(b, a):
            raise NonAssociativeReduce(f"{name!r} is not commutative on ({a}, {b})")
    _REDUCES[name] = fn


def register_map(name: str, fn: Callable):
    if name in _MAPS:
        raise DuplicateName(f"map {name!r} already registered")
    _MAPS[name] = fn


def reduce_names():
    return sorted(_REDUCES)


def map_names():
    return sorted(_MAPS)


register_reduce("sum", lambda a, b: a + b)
register_reduce("max", max)
register_reduce("min", min)

register_map("object_value", lambda cell: [(cell.object_id, cell.value)])
register_map("metric_value", lambda cell: [(cell.metric, cell.value)])
register_map("object_metric_value", lambda cell: [(f"{cell.object_id}|{cell.metric}", cell.value)])


@dataclass(frozen=True)
class KVPair:
    key: str
    value: float


@dataclass(frozen=True)
class JobSpec:
    input: SliceSpec
    map_fn: str = "object_value"
    reduce_fn: str = "sum"
    workers: int = 1
    top_k: Optional[int] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    def job_id(self) -> str:
        ident = (self.map_fn, self.reduce_fn, self.top_k, self.input.cache_key())
        digest = hashlib.sha256(repr(ident).encode()).hexdigest()[:12]
        return f"job-{digest}"


@dataclass
class AggResult:
    pairs: list
    job_id: str
    input_version: int
    empty_input: bool = False

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "input_version": self.input_version,
            "empty_input": self.empty_input,
            "pairs": [{"key": p.key, "value": p.value} for p in self.pairs],
        }


def _map_partition(map_fn, cells, offset):
    out = []
    for i, cell in enumerate(cells):
        for key, value in map_fn(cell):
            if not key:
                raise ValueError("map emitted an empty key")
            out.append((offset + i, key, value))
    return out


def run_job(spec: JobSpec, store) -> AggResult:
    """Execute a map-reduce job against one pinned store snapshot."""
    if spec.map_fn not in _MAPS:
        raise UnknownFunction(f"map {spec.map_fn!r} not registered")
    if spec.reduce_fn not in _REDUCES:
        raise UnknownFunction(f"reduce {spec.reduce_fn!r} not registered")
    map_fn = _MAPS[spec.map_fn]
    reduce_fn = _REDUCES[spec.reduce_fn]

    slice_ = store.query_slice(spec.input)
    cells = slice_.cells
    if not cells:
        return AggResult([], spec.job_id(), slice_.version, empty_input=True)

    # step 1: the master splits the input among the workers
    size = (len(cells) + spec.workers - 1) // spec.workers
    parts = [cells[i:i + size] for i in range(0, len(cells), size)]
    offsets = [i for i in range(0, len(cells), size)]

    # step 2: independent map over each part
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        mapped = list(pool.map(lambda po: _map_partition(map_fn, po[0], po[1]),
                               zip(parts, offsets)))

    # step 3: group pairs by key, preserving input-cell order inside groups
    groups: dict = {}
    for part in mapped:
        for ordinal, key, value in part:
            groups.setdefault(key, []).append((ordinal, value))

    # step 4: fold each group left-to-right; groups may run in parallel
    def fold(item):
        key, pairs = item
        pairs.sort(key=lambda p: p[0])
        acc = pairs[0][1]
        for _, value in pairs[1:]:
            acc = reduce_fn(acc, value)
        return KVPair(key, float(acc))

    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        reduced = list(pool.map(fold, sorted(groups.items())))

    reduced.sort(key=lambda p: (-p.value, p.key))
    if spec.top_k is not None:
        reduced = reduced[:spec.top_k]
    return AggResult(reduced, spec.job_id(), slice_.version)


def top_consumers(store, ts_from: int, ts_to: int, k: int, workers: int = 1,
                  metric: str = "heat_energy_kwh", reduce_fn: str = "sum") -> AggResult:
    """The worked ranking: which objects consumed the most over the window."""
    if k < 1:
        raise ValueError("k must be >= 1")
    spec = JobSpec(
        input=SliceSpec.make(None, [metric], ts_from, ts_to, "raw", None),
        map_fn="object_value",
        reduce_fn=reduce_fn,
        workers=workers,
        top_k=k,
    )
    return run_job(spec, store)
