"""HTTP/JSON service for the dashboard and scripts.

Read endpoints are value-identical to the in-process calls they wrap:
handlers parse parameters, call the module API against the shared store
and serialize the result — no arithmetic of their own. Every domain
error maps to one machine code and HTTP status; caller faults are 4xx,
store faults 5xx. Write endpoints (ingest, mode editing) are gated by a
static bearer token.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from . import errors as E
from .config import ScenarioConfig
from .forecast import CorrectionPolicy, fit_candidates, grid_from_labels, predict, select_best
from .forecast.source import load_series
from .hypertable import AggMode, HierarchyMap, HyperTableBuilder, TimeCursor, to_report
from .ingest import Batch, DeviceMap, RawReading, UnitRegistry, consolidate, immerse, normalize
from .mapreduce import top_consumers
from .store import CubeStore, FactRecord, SliceSpec

STATUS_BY_ERROR = {
    E.ConfigError: 400,
    E.CyclicParentage: 400,
    E.OrphanNode: 400,
    E.BadSpacing: 400,
    E.UnknownUnit: 400,
    E.UnknownDevice: 400,
    E.UnknownMetric: 400,
    E.EmptyBatch: 400,
    E.UnknownColumn: 400,
    E.UnknownFunction: 400,
    E.DuplicateName: 409,
    E.NonAssociativeReduce: 422,
    E.UninstrumentedSegment: 422,
    E.InvalidThresholds: 422,
    E.SeriesTooShort: 422,
    E.DegenerateDesign: 422,
    E.EmptyCandidates: 422,
    E.MissingExogenous: 422,
    E.InsufficientLags: 422,
    E.NoLeak: 404,
    E.UnknownNode: 404,
    E.UnknownMode: 404,
    E.UnknownObject: 404,
    E.UnmappedObject: 404,
    E.FallbackDisabled: 409,
    E.KeyConflict: 409,
    E.ForecastUnavailable: 409,
    E.QuorumUnavailable: 503,
    E.StoreUnavailable: 503,
    E.ChecksumMismatch: 500,
}


@dataclass
class ApiState:
    store: CubeStore
    hierarchy: HierarchyMap
    modes: dict
    device_map: DeviceMap
    registry: UnitRegistry
    forecast_grid: tuple
    exog_object: Optional[str] = None
    exog_metric: str = "supply_temp_c"
    horizon: int = 24
    holdout_steps: int = None
    token: Optional[str] = None
    page_limit: int = 500
    cors: tuple = ()
    alerts: list = field(default_factory=list)
    mesh: object = None
    modes_path: Optional[Path] = None
    static_dir: Optional[Path] = None
    window: tuple = (None, None)

    def __post_init__(self):
        self.jobs = {}
        self.latest_job = {}
        self.executor = ThreadPoolExecutor(max_workers=2)
        self.jobs_lock = threading.Lock()


def state_from_config(cfg: ScenarioConfig, out_dir=None, static_dir=None) -> ApiState:
    store = CubeStore(cfg.resolve_store_path(out_dir),
                      node_count=cfg.store.nodes, replication=cfg.store.replication,
                      block_size_limit=cfg.store.block_size_limit,
                      cache_capacity=cfg.store.cache_capacity)
    alerts = []
    alerts_path = Path(out_dir or cfg.out_dir) / "alerts.ndjson"
    if alerts_path.exists():
        alerts = [json.loads(line) for line in alerts_path.read_text().splitlines() if line]
    mesh = None
    if cfg.mesh.get("segments"):
        from .mesh import build_topology
        mesh = build_topology(cfg.mesh)
    return ApiState(
        store=store,
        hierarchy=HierarchyMap(cfg.hierarchy),
        modes=dict(cfg.aggmodes),
        device_map=DeviceMap.from_rows(cfg.devices),
        registry=UnitRegistry(cfg.units),
        forecast_grid=cfg.forecast.grid,
        exog_object=cfg.forecast.exog_object,
        exog_metric=cfg.forecast.exog_metric,
        horizon=cfg.forecast.horizon,
        holdout_steps=cfg.forecast.holdout_steps,
        token=cfg.api.token,
        page_limit=cfg.api.page_limit,
        cors=cfg.api.cors,
        alerts=alerts,
        mesh=mesh,
        modes_path=Path(out_dir or cfg.out_dir) / "modes.json",
        static_dir=static_dir,
        window=(cfg.start_epoch, cfg.start_epoch + cfg.duration_hours * 3600),
    )


def _page(items, limit, offset, cap):
    limit = cap if limit is None else max(1, min(int(limit), cap * 10))
    offset = max(0, int(offset or 0))
    return {
        "total": len(items),
        "limit": limit,
        "offset": offset,
        "items": items[offset:offset + limit],
    }


def _require_token(state: ApiState, request: Request):
    want = state.token
    if not want:
        raise E.ConfigError("write endpoints need a configured API token")
    got = request.headers.get("authorization", "")
    if got.startswith("Bearer "):
        got = got[len("Bearer "):]
    else:
        got = request.headers.get("x-api-token", "")
    if got != want:
        raise _Unauthorized()


class _Unauthorized(Exception):
    pass


def _cursor_from_params(ts_from, ts_to, cursor_mode, scenario):
    if ts_from is None or ts_to is None:
        raise E.ConfigError("ts_from and ts_to are required")
    return TimeCursor(int(ts_from), int(ts_to), cursor_mode or "archive", scenario)


def create_app(state: ApiState) -> FastAPI:
    app = FastAPI(title="heatmon", docs_url=None, redoc_url=None, openapi_url="/openapi.json")

    if state.cors:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(state.cors),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(E.HeatmonError)
    async def heatmon_error(request: Request, exc: E.HeatmonError):
        status = STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(_Unauthorized)
    async def unauthorized(request: Request, exc: _Unauthorized):
        return JSONResponse(status_code=401,
                            content={"code": "unauthorized", "message": "missing or wrong token"})

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content={"code": "bad_request", "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "store_version": state.store.version}

    @app.get("/objects")
    def objects(limit: int = None, offset: int = 0):
        coords = state.device_map.object_coords()
        rows = []
        for object_id in state.store.objects():
            row = {"object_id": object_id}
            lonlat = coords.get(object_id)
            if lonlat:
                row["lon"], row["lat"] = lonlat
            if object_id in state.hierarchy.objects:
                path = state.hierarchy.path(object_id, ("city", "district", "network", "object"))
                row.update({"city": path[0], "district": path[1], "network": path[2]})
            rows.append(row)
        return _page(rows, limit, offset, state.page_limit)

    @app.get("/slice")
    def slice_endpoint(metrics: str, ts_from: int, ts_to: int, objects: str = "all",
                       grain: str = "raw", agg: str = "sum",
                       limit: int = None, offset: int = 0):
        objs = None if objects in ("all", "") else objects.split(",")
        spec = SliceSpec.make(objs, metrics.split(","), ts_from, ts_to, grain, agg)
        slice_ = state.store.query_slice(spec)
        cells = [
            {"object_id": c.object_id, "metric": c.metric, "bucket_ts": c.bucket_ts,
             "value": c.value, "count": c.count, "quality": c.quality}
            for c in slice_.cells
        ]
        page = _page(cells, limit, offset, state.page_limit)
        return {
            "version": slice_.version,
            "grain": spec.grain,
            "agg": spec.agg,
            "blocks": len(slice_.blocks),
            "cells": page["items"],
            "total_cells": page["total"],
            "limit": page["limit"],
            "offset": page["offset"],
        }

    @app.get("/hypertable")
    def hypertable(mode: str, ts_from: int = None, ts_to: int = None,
                   cursor_mode: str = "archive", scenario: str = None):
        agg_mode = state.modes.get(mode)
        if agg_mode is None:
            raise E.UnknownMode(f"aggregation mode {mode!r} not configured")
        cursor = _cursor_from_params(ts_from, ts_to, cursor_mode, scenario)
        builder = HyperTableBuilder(state.store, state.hierarchy)
        table = builder.build(agg_mode, cursor)
        return to_report(table).to_json_obj()

    @app.get("/hypertable/modes")
    def hypertable_modes():
        return {"items": [state.modes[k].to_json() for k in sorted(state.modes)],
                "total": len(state.modes)}

    @app.put("/hypertable/mode")
    async def put_mode(request: Request):
        _require_token(state, request)
        body = await request.json()
        mode = AggMode.from_json(body)
        state.modes[mode.mode_id] = mode
        if state.modes_path is not None:
            state.modes_path.parent.mkdir(parents=True, exist_ok=True)
            state.modes_path.write_text(json.dumps(
                {k: m.to_json() for k, m in sorted(state.modes.items())},
                sort_keys=True, indent=2))
        return {"ok": True, "mode_id": mode.mode_id}

    @app.post("/jobs/top-consumers")
    async def jobs_top_consumers(request: Request):
        body = await request.json()
        result = top_consumers(
            state.store,
            int(body["ts_from"]), int(body["ts_to"]),
            k=int(body.get("k", 10)),
            workers=int(body.get("workers", 1)),
            metric=body.get("metric", "heat_energy_kwh"),
            reduce_fn=body.get("reduce", "sum"),
        )
        return result.to_json()

    def _forecast_key(object_id, metric, scenario):
        return (object_id, metric, scenario or "")

    def _run_forecast_job(job_id, object_id, metric, horizon, scenario):
        try:
            series = load_series(state.store, object_id, metric,
                                 exog_object=state.exog_object,
                                 exog_metric=state.exog_metric,
                                 exog_extend=horizon * 3600)
            fitted = fit_candidates(series, grid_from_labels(state.forecast_grid),
                                    holdout_steps=state.holdout_steps,
                                    store_version=state.store.version)
            best = select_best(fitted.models)
            forecast = predict(best, series, horizon)
            ns = f"forecast.{scenario + '.' if scenario else ''}{metric}"
            state.store.append([FactRecord(object_id, ns, int(t), float(v))
                                for t, v in forecast.points])
            payload = {"status": "done", "object_id": object_id, "metric": metric,
                       "scenario": scenario, "forecast": forecast.to_json()}
        except E.HeatmonError as exc:
            payload = {"status": "error",
                       "error": {"code": exc.code, "message": str(exc)}}
        with state.jobs_lock:
            state.jobs[job_id] = payload

    @app.post("/forecast/run")
    async def forecast_run(request: Request):
        body = await request.json()
        object_id = body["object_id"]
        metric = body.get("metric", "heat_energy_kwh")
        horizon = int(body.get("horizon", state.horizon))
        scenario = body.get("scenario")
        if state.store.series_bounds(object_id, metric) is None:
            raise E.UnknownObject(f"no data for {object_id!r}/{metric!r}")
        job_id = f"fj-{uuid.uuid4().hex[:12]}"
        with state.jobs_lock:
            state.jobs[job_id] = {"status": "pending"}
            state.latest_job[_forecast_key(object_id, metric, scenario)] = job_id
        state.executor.submit(_run_forecast_job, job_id, object_id, metric, horizon, scenario)
        return JSONResponse(status_code=202, content={"job_id": job_id, "status": "pending"})

    @app.get("/forecast/jobs/{job_id}")
    def forecast_job(job_id: str):
        with state.jobs_lock:
            payload = state.jobs.get(job_id)
        if payload is None:
            raise E.UnknownObject(f"no such job {job_id!r}")
        return payload

    @app.get("/forecast/{object_id}/{metric}")
    def forecast_latest(object_id: str, metric: str, scenario: str = None):
        key = _forecast_key(object_id, metric, scenario)
        with state.jobs_lock:
            job_id = state.latest_job.get(key)
            payload = state.jobs.get(job_id) if job_id else None
        if payload is not None:
            return dict(payload, job_id=job_id)
        ns = f"forecast.{scenario + '.' if scenario else ''}{metric}"
        bounds = state.store.series_bounds(object_id, ns)
        if bounds is None:
            raise E.UnknownObject(f"no forecast for {object_id!r}/{metric!r}")
        cells = state.store.query_slice(SliceSpec.make(
            [object_id], [ns], bounds[0], bounds[1] + 3600, "raw", None)).cells
        return {
            "status": "done",
            "object_id": object_id,
            "metric": metric,
            "scenario": scenario,
            "forecast": {"points": [{"ts": c.bucket_ts, "value": c.value} for c in cells]},
            "source": "store",
        }

    @app.get("/alerts/leaks")
    def alerts(limit: int = None, offset: int = 0):
        ordered = sorted(state.alerts, key=lambda a: (-a["onset"], a["pipeline_id"]))
        return _page(ordered, limit, offset, state.page_limit)

    @app.get("/mesh/topology")
    def mesh_topology():
        if state.mesh is None:
            return {"nodes": [], "pipelines": []}
        nodes = [
            {"node_id": n.node_id, "role": n.role, "segment": n.segment,
             "parent": n.parent, "battery": n.battery}
            for _, n in sorted(state.mesh.nodes.items())
        ]
        pipelines = [
            {"pipeline_id": p.pipeline_id, "length_m": p.length_m, "spacing": p.spacing,
             "terminals": [{"terminal_id": t.terminal_id, "pos": t.pipeline_pos,
                            "hosts_repeater": t.hosts_repeater} for t in p.terminals]}
            for _, p in sorted(state.mesh.pipelines.items())
        ]
        return {"nodes": nodes, "pipelines": pipelines}

    @app.post("/ingest/batch")
    async def ingest_batch(request: Request):
        _require_token(state, request)
        body = await request.json()
        raws = [RawReading.from_json(r) for r in body.get("readings", ())]
        result = normalize(raws, state.registry, state.device_map)
        batch = consolidate(
            [Batch("api", result.readings, body.get("source", "file"))],
            batch_id=body.get("batch_id"))
        receipt = immerse(batch, state.store)
        return {
            "batch_id": receipt.batch_id,
            "count": receipt.count,
            "duplicate": receipt.duplicate,
            "store_version": receipt.store_version,
            "rejects": [rej.to_json() for rej in result.rejects],
        }

    if state.static_dir and Path(state.static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(state.static_dir), html=True), name="ui")

    app.state.heatmon = state
    return app


def serve(cfg: ScenarioConfig, out_dir=None, host=None, port=None, static_dir=None):
    import uvicorn
    state = state_from_config(cfg, out_dir=out_dir, static_dir=static_dir)
    app = create_app(state)
    uvicorn.run(app, host=host or cfg.api.host, port=port or cfg.api.port, log_level="info")
