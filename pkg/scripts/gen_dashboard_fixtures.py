"""Regenerate the dashboard contract fixtures from the live API surface.

Usage: python3 scripts/gen_dashboard_fixtures.py

Writes real HTTP payloads (captured through the app's own test client)
into frontend/tests/fixtures/ so the dashboard tests render exactly what
the service emits.
"""

import json
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from heatmon.api import ApiState, create_app
from heatmon.fixtures import (
    T0,
    build_store_fixture,
    device_rows,
    hierarchy_rows,
    kuznetsk_small,
    mesh_config,
)
from heatmon.hypertable import AggMode, ColorRule, HierarchyMap
from heatmon.ingest import DeviceMap, UnitRegistry
from heatmon.mesh import build_topology
from heatmon.store import CubeStore, FactRecord

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

FX = kuznetsk_small()
HOURS = 30 * 24
DAY = 86400

ALERTS = [
    {"pipeline_id": "heat-main-1", "segment": ["T300", "T600"], "est_pos": 450.0,
     "confidence": 0.6634905377106096, "onset": 7200, "detected_at": 7200},
]

MODES = {
    "default": AggMode(
        "default",
        ("heat_energy_kwh", "flow_m3h", "forecast.heat_energy_kwh"),
        ("city", "district", "network", "object"),
        (("flow_m3h", "sum"), ("forecast.heat_energy_kwh", "sum"),
         ("heat_energy_kwh", "sum")),
        (ColorRule("heat_energy_kwh", (400.0, 900.0), ("low", "mid", "high")),),
        "hour",
    ),
    "compact": AggMode(
        "compact",
        ("heat_energy_kwh", "supply_temp_c"),
        ("city", "district", "object"),
        (("heat_energy_kwh", "sum"), ("supply_temp_c", "mean")),
        (),
        "day",
    ),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        store = CubeStore(tmp, node_count=3, replication=2, block_size_limit=1 << 20)
        build_store_fixture(store, FX, hours=HOURS)
        # a persisted forecast so forecast columns and the panel have data
        store.append([
            FactRecord("obj-01", "forecast.heat_energy_kwh", T0 + (HOURS + h) * 3600,
                       40.0 + (h % 24))
            for h in range(24)
        ])
        state = ApiState(
            store=store,
            hierarchy=HierarchyMap(hierarchy_rows(FX)),
            modes=dict(MODES),
            device_map=DeviceMap.from_rows(device_rows(FX)),
            registry=UnitRegistry(),
            forecast_grid=("seasonal_naive:24", "moving_average:3"),
            exog_object=FX.weather_object,
            token="fixture-token",
            alerts=list(ALERTS),
            mesh=build_topology(mesh_config(FX)),
        )
        client = TestClient(create_app(state))

        def dump(name, response):
            assert response.status_code in (200, 202), (name, response.status_code, response.text)
            (OUT / name).write_text(json.dumps(response.json(), indent=2, sort_keys=True) + "\n")

        positions = [T0 + d * DAY for d in (2, 7, 12, 18, 24)]
        for mode_id in MODES:
            for i, ts_from in enumerate(positions):
                dump(f"hypertable-{mode_id}-{i}.json", client.get("/hypertable", params={
                    "mode": mode_id, "ts_from": ts_from, "ts_to": ts_from + DAY}))
        dump("modes.json", client.get("/hypertable/modes"))
        dump("objects.json", client.get("/objects"))
        dump("alerts.json", client.get("/alerts/leaks"))
        dump("slice-actuals.json", client.get("/slice", params={
            "metrics": "heat_energy_kwh", "objects": "obj-01",
            "ts_from": T0 + 28 * DAY, "ts_to": T0 + 30 * DAY}))
        run = client.post("/forecast/run", json={"object_id": "obj-01",
                                                 "metric": "heat_energy_kwh"})
        job_id = run.json()["job_id"]
        for _ in range(200):
            job = client.get(f"/forecast/jobs/{job_id}")
            if job.json()["status"] != "pending":
                break
            time.sleep(0.05)
        dump("forecast-done.json", job)
        dump("mesh-topology.json", client.get("/mesh/topology"))
        print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
