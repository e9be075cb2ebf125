"""HTTP layer: every read endpoint must mirror the in-process call exactly."""

import time

import pytest
from fastapi.testclient import TestClient

from heatmon.api import ApiState, create_app
from heatmon.fixtures import build_store_fixture, device_rows, hierarchy_rows, kuznetsk_small
from heatmon.forecast import fit_candidates, grid_from_labels, predict, select_best
from heatmon.forecast.source import load_series
from heatmon.hypertable import AggMode, HierarchyMap, HyperTableBuilder, TimeCursor, to_report
from heatmon.ingest import DeviceMap, UnitRegistry
from heatmon.mapreduce import top_consumers
from heatmon.mesh import build_topology
from heatmon.fixtures import mesh_config
from heatmon.store import SliceSpec

from conftest import T0, make_store

FX = kuznetsk_small()
HOURS = 30 * 24
END = T0 + HOURS * 3600
GRID = ("seasonal_naive:24", "moving_average:3", "moving_average:24")
TOKEN = "test-token"

ALERTS = [
    {"pipeline_id": "heat-main-1", "segment": ["T300", "T600"], "est_pos": 450.0,
     "confidence": 0.62, "onset": 7200, "detected_at": 7200},
    {"pipeline_id": "heat-main-1", "segment": ["T900", "T1200"], "est_pos": 1000.0,
     "confidence": 0.5, "onset": 9000, "detected_at": 9000},
]


@pytest.fixture(scope="module")
def api_store(tmp_path_factory):
    store = make_store(tmp_path_factory.mktemp("api") / "store", block_size_limit=1 << 20)
    build_store_fixture(store, FX, hours=HOURS)
    return store


@pytest.fixture(scope="module")
def state(api_store):
    default_mode = AggMode(
        mode_id="default",
        visible_columns=("heat_energy_kwh", "flow_m3h"),
        levels=("city", "district", "network", "object"),
        agg_per_column=(("heat_energy_kwh", "sum"), ("flow_m3h", "sum")),
        grain="hour",
    )
    return ApiState(
        store=api_store,
        hierarchy=HierarchyMap(hierarchy_rows(FX)),
        modes={"default": default_mode},
        device_map=DeviceMap.from_rows(device_rows(FX)),
        registry=UnitRegistry(),
        forecast_grid=GRID,
        exog_object=FX.weather_object,
        horizon=24,
        token=TOKEN,
        alerts=list(ALERTS),
        mesh=build_topology(mesh_config(FX)),
    )


@pytest.fixture(scope="module")
def client(state):
    return TestClient(create_app(state))


def test_healthz(client, api_store):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"
    assert body["store_version"] == api_store.version


def test_slice_equals_in_process_call(client, api_store):
    params = {"metrics": "heat_energy_kwh,flow_m3h", "ts_from": T0,
              "ts_to": T0 + 3 * 86400, "grain": "day", "agg": "sum", "limit": 500}
    body = client.get("/slice", params=params).json()
    spec = SliceSpec.make(None, ["heat_energy_kwh", "flow_m3h"], T0, T0 + 3 * 86400, "day", "sum")
    expected = api_store.query_slice(spec)
    assert body["version"] == expected.version
    assert body["total_cells"] == len(expected.cells)
    got = [(c["object_id"], c["metric"], c["bucket_ts"], c["value"], c["count"], c["quality"])
           for c in body["cells"]]
    want = [(c.object_id, c.metric, c.bucket_ts, c.value, c.count, c.quality)
            for c in expected.cells]
    assert got == want


def test_slice_pagination(client):
    params = {"metrics": "heat_energy_kwh", "ts_from": T0, "ts_to": T0 + 86400,
              "grain": "raw", "limit": 10, "offset": 5}
    body = client.get("/slice", params=params).json()
    assert len(body["cells"]) == 10 and body["offset"] == 5
    assert body["total_cells"] == 12 * 24


def test_slice_bad_grain_is_machine_coded_400(client):
    r = client.get("/slice", params={"metrics": "heat_energy_kwh", "ts_from": T0,
                                     "ts_to": T0 + 3600, "grain": "fortnight"})
    assert r.status_code == 400
    assert r.json()["code"] == "bad_request"


def test_objects_listing(client):
    body = client.get("/objects").json()
    ids = [row["object_id"] for row in body["items"]]
    assert set(FX.objects) <= set(ids)
    first = next(row for row in body["items"] if row["object_id"] == "obj-01")
    assert first["district"] == FX.district_of("obj-01")
    assert "lon" in first and "lat" in first


def test_hypertable_equals_in_process_report(client, api_store, state):
    params = {"mode": "default", "ts_from": T0, "ts_to": T0 + 86400}
    body = client.get("/hypertable", params=params).json()
    builder = HyperTableBuilder(api_store, state.hierarchy)
    table = builder.build(state.modes["default"], TimeCursor(T0, T0 + 86400))
    assert body == to_report(table).to_json_obj()


def test_hypertable_unknown_mode_404(client):
    r = client.get("/hypertable", params={"mode": "nope", "ts_from": T0, "ts_to": T0 + 1})
    assert r.status_code == 404 and r.json()["code"] == "unknown_mode"


def test_mode_put_requires_token_and_validates(client, state):
    mode_json = state.modes["default"].to_json()
    mode_json["mode_id"] = "alt"
    assert client.put("/hypertable/mode", json=mode_json).status_code == 401
    ok = client.put("/hypertable/mode", json=mode_json,
                    headers={"Authorization": f"Bearer {TOKEN}"})
    assert ok.status_code == 200 and "alt" in state.modes
    bad = dict(mode_json, color_rules=[
        {"column": "heat_energy_kwh", "thresholds": [200.0, 100.0], "classes": ["a", "b", "c"]}])
    r = client.put("/hypertable/mode", json=bad, headers={"Authorization": f"Bearer {TOKEN}"})
    assert r.status_code == 422 and r.json()["code"] == "invalid_thresholds"


def test_top_consumers_job_equals_in_process(client, api_store):
    body = client.post("/jobs/top-consumers",
                       json={"ts_from": T0, "ts_to": END, "k": 5, "workers": 2}).json()
    expected = top_consumers(api_store, T0, END, k=5, workers=2)
    assert body["pairs"] == [{"key": p.key, "value": p.value} for p in expected.pairs]
    assert body["job_id"] == expected.job_id


def _poll_job(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = client.get(f"/forecast/jobs/{job_id}").json()
        if body["status"] != "pending":
            return body
        time.sleep(0.05)
    raise AssertionError("job never completed")


def test_forecast_job_lifecycle_and_equality(client, api_store, state):
    r = client.post("/forecast/run", json={"object_id": "obj-02", "metric": "heat_energy_kwh"})
    assert r.status_code == 202
    job_id = r.json()["job_id"]
    assert r.json()["status"] == "pending"
    body = _poll_job(client, job_id)
    assert body["status"] == "done"
    # oracle: the same fit/select/predict path run in-process
    series = load_series(api_store, "obj-02", "heat_energy_kwh",
                         exog_object=FX.weather_object, exog_extend=24 * 3600)
    best = select_best(fit_candidates(series, grid_from_labels(GRID),
                                      store_version=api_store.version).models)
    expected = predict(best, series, 24)
    assert body["forecast"]["model"]["model"] == best.spec.label()
    assert body["forecast"]["points"] == [
        {"ts": int(t), "value": float(v)} for t, v in expected.points]
    # persisted into the reserved namespace
    assert api_store.series_bounds("obj-02", "forecast.heat_energy_kwh") is not None
    # GET latest reflects the finished job
    got = client.get("/forecast/obj-02/heat_energy_kwh").json()
    assert got["status"] == "done" and got["job_id"] == job_id


def test_forecast_unknown_object_404(client):
    r = client.post("/forecast/run", json={"object_id": "ghost", "metric": "heat_energy_kwh"})
    assert r.status_code == 404 and r.json()["code"] == "unknown_object"
    r = client.get("/forecast/ghost/heat_energy_kwh")
    assert r.status_code == 404


def test_fit_errors_surface_as_done_with_error(client, api_store):
    from heatmon.store import FactRecord
    api_store.append([FactRecord("short-1", "heat_energy_kwh", T0 + 3600 * h, 1.0)
                      for h in range(50)])  # far too short for any candidate
    r = client.post("/forecast/run", json={"object_id": "short-1",
                                           "metric": "heat_energy_kwh"})
    assert r.status_code == 202
    body = _poll_job(client, r.json()["job_id"])
    assert body["status"] == "error"
    assert body["error"]["code"] == "series_too_short"


def test_leak_alerts_newest_first(client):
    body = client.get("/alerts/leaks").json()
    onsets = [a["onset"] for a in body["items"]]
    assert onsets == sorted(onsets, reverse=True)
    assert body["items"][0]["segment"] == ["T900", "T1200"]


def test_mesh_topology_endpoint(client):
    body = client.get("/mesh/topology").json()
    roles = {n["node_id"]: n["role"] for n in body["nodes"]}
    assert roles["coord-1"] == "coordinator"
    assert sum(1 for r in roles.values() if r == "end_device") == 12
    (pipeline,) = body["pipelines"]
    assert [t["pos"] for t in pipeline["terminals"]] == [0, 300, 600, 900, 1200, 1500]


def test_ingest_batch_token_gate_and_effect(client, api_store):
    readings = [{"device_id": "dev-01", "metric": "heat_energy_kwh",
                 "ts": END + 3600, "value": 3.6, "unit": "gj"}]
    payload = {"batch_id": "api-batch-1", "source": "file", "readings": readings}
    assert client.post("/ingest/batch", json=payload).status_code == 401
    r = client.post("/ingest/batch", json=payload,
                    headers={"Authorization": f"Bearer {TOKEN}"})
    assert r.status_code == 200
    body = r.json()
    assert body["count"] == 1 and body["rejects"] == []
    cells = client.get("/slice", params={
        "metrics": "heat_energy_kwh", "objects": "obj-01",
        "ts_from": END + 3600, "ts_to": END + 7200}).json()["cells"]
    assert cells == [{"object_id": "obj-01", "metric": "heat_energy_kwh",
                      "bucket_ts": END + 3600, "value": 1000.0, "count": 1,
                      "quality": "good"}]
    again = client.post("/ingest/batch", json=payload,
                        headers={"Authorization": f"Bearer {TOKEN}"})
    assert again.json()["duplicate"] is True


def test_restart_changes_no_read_result(state, client):
    fresh_client = TestClient(create_app(state))
    params = {"metrics": "electric_kwh", "ts_from": T0, "ts_to": T0 + 2 * 86400,
              "grain": "day", "agg": "mean"}
    assert fresh_client.get("/slice", params=params).json() == \
        client.get("/slice", params=params).json()


def test_every_domain_error_has_a_status_mapping():
    import inspect

    from heatmon import errors as E
    from heatmon.api import STATUS_BY_ERROR

    bases = {E.HeatmonError, E.TopologyError}
    concrete = [
        obj for _, obj in inspect.getmembers(E, inspect.isclass)
        if issubclass(obj, E.HeatmonError) and obj not in bases
    ]
    unmapped = [cls.__name__ for cls in concrete if cls not in STATUS_BY_ERROR]
    assert unmapped == [], f"errors without a status mapping: {unmapped}"
    for cls, status in STATUS_BY_ERROR.items():
        assert 400 <= status < 600
