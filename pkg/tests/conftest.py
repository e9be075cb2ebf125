import numpy as np
import pytest

from heatmon.store import CubeStore, FactRecord

METRICS = ("heat_energy_kwh", "flow_m3h", "supply_temp_c", "return_temp_c", "electric_kwh")

T0 = 1609459200  # 2021-01-01T00:00:00Z


def make_store(path, **kw):
    kw.setdefault("node_count", 3)
    kw.setdefault("replication", 2)
    kw.setdefault("block_size_limit", 4096)   # small limit so multi-block paths run
    return CubeStore(path, **kw)


def hourly_records(object_id, metric, start_ts, hours, value_fn=lambda h: 1.0, quality="good"):
    return [
        FactRecord(object_id, metric, start_ts + 3600 * h, float(value_fn(h)), quality)
        for h in range(hours)
    ]


@pytest.fixture
def store(tmp_path):
    return make_store(tmp_path / "store")


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
