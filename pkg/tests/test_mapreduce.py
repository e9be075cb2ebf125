import pytest

from heatmon.errors import DuplicateName, NonAssociativeReduce, UnknownFunction
from heatmon.mapreduce import (
    AggResult,
    JobSpec,
    KVPair,
    register_reduce,
    run_job,
    top_consumers,
)
from heatmon.store import FactRecord, SliceSpec

from conftest import T0, hourly_records


def sequential_fold(cells, key_fn, fold=lambda a, b: a + b):
    """Single-threaded single-pass oracle over the same input cells."""
    acc = {}
    for c in cells:
        k = key_fn(c)
        acc[k] = fold(acc[k], c.value) if k in acc else c.value
    return sorted(acc.items(), key=lambda kv: (-kv[1], kv[0]))


def seed_consumption(store, totals):
    """One object per entry; spread each total over a few hourly records."""
    for obj, total in totals.items():
        parts = [total / 4.0] * 4
        store.append([
            FactRecord(obj, "heat_energy_kwh", T0 + 3600 * i, v)
            for i, v in enumerate(parts)
        ])


def year_spec(**kw):
    return SliceSpec.make(None, ["heat_energy_kwh"], T0, T0 + 365 * 86400, "raw", None, **kw)


def test_top_consumer_matches_hand_fold(store):
    seed_consumption(store, {"A": 10.0, "B": 30.0, "C": 20.0})
    result = top_consumers(store, T0, T0 + 86400, k=1)
    assert [(p.key, p.value) for p in result.pairs] == [("B", 30.0)]
    cells = store.query_slice(year_spec()).cells
    assert [(p.key, p.value) for p in top_consumers(store, T0, T0 + 365 * 86400, k=3).pairs] == \
        sequential_fold(cells, lambda c: c.object_id)


def test_empty_slice_flagged_not_error(store):
    result = run_job(JobSpec(input=year_spec()), store)
    assert isinstance(result, AggResult)
    assert result.pairs == [] and result.empty_input


def test_worker_counts_produce_identical_results(store, rng):
    for o in range(6):
        store.append(hourly_records(f"obj-{o:02d}", "heat_energy_kwh", T0, 24 * 14,
                                    lambda h: float(rng.random() * 10)))
    results = [
        run_job(JobSpec(input=year_spec(), workers=w), store)
        for w in (1, 2, 7)
    ]
    assert results[0].pairs == results[1].pairs == results[2].pairs
    # and they equal the sequential oracle bit-for-bit
    cells = store.query_slice(year_spec()).cells
    assert [(p.key, p.value) for p in results[0].pairs] == \
        sequential_fold(cells, lambda c: c.object_id)


def test_k_larger_than_object_count_returns_everything(store):
    seed_consumption(store, {"A": 1.0, "B": 2.0})
    result = top_consumers(store, T0, T0 + 86400, k=50)
    assert len(result.pairs) == 2


def test_equal_sums_tie_break_by_key(store):
    seed_consumption(store, {"obj-b": 8.0, "obj-a": 8.0})
    result = top_consumers(store, T0, T0 + 86400, k=2)
    assert [p.key for p in result.pairs] == ["obj-a", "obj-b"]


def test_top_k_is_prefix_of_untruncated(store):
    seed_consumption(store, {f"obj-{i}": float(i * 3 % 11) for i in range(8)})
    full = run_job(JobSpec(input=year_spec()), store)
    for k in (1, 3, 8):
        trunc = run_job(JobSpec(input=year_spec(), top_k=k), store)
        assert trunc.pairs == full.pairs[:k]


def test_key_completeness(store):
    seed_consumption(store, {f"obj-{i}": float(i + 1) for i in range(5)})
    result = run_job(JobSpec(input=year_spec(), map_fn="object_metric_value"), store)
    keys = [p.key for p in result.pairs]
    assert sorted(keys) == sorted({f"obj-{i}|heat_energy_kwh" for i in range(5)})
    assert len(keys) == len(set(keys))


def test_register_rejects_subtraction_and_duplicates():
    with pytest.raises(NonAssociativeReduce):
        register_reduce("sub", lambda a, b: a - b)
    with pytest.raises(DuplicateName):
        register_reduce("sum", lambda a, b: a + b)


def test_max_reduce_returns_per_object_peak(store):
    store.append(hourly_records("obj-x", "heat_energy_kwh", T0, 24, lambda h: float(h)))
    store.append(hourly_records("obj-y", "heat_energy_kwh", T0, 24, lambda h: float(2 * h)))
    result = run_job(JobSpec(input=year_spec(), reduce_fn="max"), store)
    cells = store.query_slice(year_spec()).cells
    oracle = sequential_fold(cells, lambda c: c.object_id, fold=max)
    assert [(p.key, p.value) for p in result.pairs] == oracle == [("obj-y", 46.0), ("obj-x", 23.0)]


def test_unknown_function_errors(store):
    seed_consumption(store, {"A": 1.0})
    with pytest.raises(UnknownFunction):
        run_job(JobSpec(input=year_spec(), map_fn="nope"), store)
    with pytest.raises(UnknownFunction):
        run_job(JobSpec(input=year_spec(), reduce_fn="nope"), store)


def test_job_ids_are_deterministic(store):
    seed_consumption(store, {"A": 1.0})
    a = run_job(JobSpec(input=year_spec(), top_k=2), store)
    b = run_job(JobSpec(input=year_spec(), top_k=2), store)
    assert a.job_id == b.job_id
