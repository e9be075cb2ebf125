"""End-to-end scenario driver: simulate, ingest, analyze, report.

One call runs the whole pipeline against a ScenarioConfig and leaves a
self-describing artifact directory behind:

    frames.ndjson        delivered frame trace
    alerts.ndjson        leak alerts raised during the run
    rejects.ndjson       quarantined raw readings (if any)
    top_consumers.*      ranking as JSON/CSV
    hypertable.*         decision table as text/JSON/CSV
    map.geojson          per-object map layer
    figures/*.png        rendered diagrams
    manifest.json        counts, versions and artifact checksums

The manifest is a pure function of (config, seed): no wall-clock values
are recorded, paths are relative, and artifact checksums make repeat
runs comparable byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path

from .config import ScenarioConfig
from .errors import ConfigError
from .forecast import fit_candidates, grid_from_labels, predict, required_length, select_best
from .forecast.source import load_series
from .geo import export_geojson
from .hypertable import HierarchyMap, HyperTableBuilder, TimeCursor, to_report
from .ingest import (
    Batch,
    DeviceMap,
    UnitRegistry,
    consolidate,
    immerse,
    normalize,
    write_rejects,
)
from .mapreduce import top_consumers
from .mesh import LeakEvent, MeshSimulation, build_topology, write_alerts, write_trace
from .store import CubeStore, FactRecord
from .fixtures import FixtureSpec, SyntheticSource, weather_raw_readings
from . import report as report_mod


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def scenario_run(cfg: ScenarioConfig, out_dir=None) -> dict:
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    figures_dir = out / "figures"
    artifacts = {}

    def track(name: str, path: Path):
        artifacts[name] = {
            "path": str(path.relative_to(out)),
            "sha256": _sha256(path),
            "bytes": path.stat().st_size,
        }

    # 1. simulate the collection mesh
    mesh = build_topology(cfg.mesh)
    sim = MeshSimulation(mesh, seed=cfg.seed)
    for leak in cfg.leaks:
        sim.inject_leak(LeakEvent(leak["pipeline_id"], float(leak["true_pos"]),
                                  int(leak["onset"]), float(leak.get("severity", 1.0))))
    mapped = {d["device_id"]: d["object_id"] for d in cfg.devices}
    # every mesh end device meters its object; unmapped devices still measure
    # (series keyed by device id) and get quarantined later by normalize
    device_obj = [(dev, mapped.get(dev, dev)) for dev in mesh.end_devices()]
    source = SyntheticSource(cfg.seed, cfg.start_epoch, device_obj, cfg.duration_hours)
    frames = sim.run(cfg.duration_hours * 3600, source)
    frames_path = out / "frames.ndjson"
    write_trace(frames, frames_path)
    track("frames", frames_path)
    alerts_path = out / "alerts.ndjson"
    write_alerts(sim.alerts, alerts_path)
    track("alerts", alerts_path)

    # 2. normalize + consolidate + immerse
    registry = UnitRegistry(cfg.units)
    device_map = DeviceMap.from_rows(cfg.devices)
    mesh_raw = [r for f in frames if f.transport == "mesh" for r in f.payload]
    cell_raw = [r for f in frames if f.transport == "cellular" for r in f.payload]
    weather_raw = []
    fx = FixtureSpec(cfg.name, cfg.seed)
    weather_device_ids = set(mapped) - set(mesh.end_devices())
    if cfg.forecast.exog_object and fx.weather_device in weather_device_ids:
        # outdoor temperature extends past the run end: the forecast horizon
        # needs future exogenous values (a weather forecast, in effect)
        weather_raw = weather_raw_readings(fx, cfg.duration_hours + cfg.forecast.horizon)
    results = {
        "mesh": normalize(mesh_raw, registry, device_map),
        "cellular": normalize(cell_raw, registry, device_map),
        "file": normalize(weather_raw, registry, device_map),
    }
    rejects = [rej for r in results.values() for rej in r.rejects]
    if rejects:
        rejects_path = out / "rejects.ndjson"
        write_rejects(rejects, rejects_path)
        track("rejects", rejects_path)
    total_readings = sum(len(r.readings) for r in results.values())
    if total_readings == 0 and rejects:
        by_error = Counter(rej.error for rej in rejects)
        failure = {"error": "ingest_failed",
                   "message": "every raw reading was quarantined",
                   "rejects_by_error": dict(sorted(by_error.items()))}
        (out / "failure.json").write_text(json.dumps(failure, sort_keys=True, indent=2))
        raise ConfigError(f"ingest produced no readings; rejects: {dict(by_error)}")

    batch = consolidate(
        [Batch(f"{cfg.name}-mesh", results["mesh"].readings, "mesh"),
         Batch(f"{cfg.name}-cellular", results["cellular"].readings, "cellular"),
         Batch(f"{cfg.name}-file", results["file"].readings, "file")],
        batch_id=f"{cfg.name}-run-{cfg.seed}",
        expected_interval=cfg.expected_interval)
    store = CubeStore(cfg.resolve_store_path(out), node_count=cfg.store.nodes,
                      replication=cfg.store.replication,
                      block_size_limit=cfg.store.block_size_limit,
                      cache_capacity=cfg.store.cache_capacity)
    receipt = immerse(batch, store)

    window_from = cfg.start_epoch
    window_to = cfg.start_epoch + cfg.duration_hours * 3600

    # 3. the worked ranking
    ranking = top_consumers(store, window_from, window_to,
                            k=cfg.report.top_k, workers=cfg.report.workers)
    for name, path in report_mod.write_agg_result(ranking, out).items():
        track(f"top_consumers_{name}", Path(path))

    # 4. fit/select/persist forecasts
    forecast_summary = {}
    targets = cfg.forecast.objects or tuple(r["object_id"] for r in cfg.hierarchy)
    grid = grid_from_labels(cfg.forecast.grid)
    horizon = cfg.forecast.horizon
    holdout_steps = cfg.forecast.holdout_steps
    need_hours = required_length(grid, holdout_steps)
    if cfg.duration_hours < need_hours:
        raise ConfigError(
            f"duration_hours={cfg.duration_hours} is too short for the forecast grid "
            f"(needs {need_hours} h); extend the run or shrink grid/holdout_days")
    first_plot = None
    for object_id in targets:
        for metric in cfg.forecast.targets:
            series = load_series(store, object_id, metric, window_from, window_to,
                                 exog_object=cfg.forecast.exog_object,
                                 exog_metric=cfg.forecast.exog_metric,
                                 exog_extend=horizon * 3600)
            fitted = fit_candidates(series, grid, holdout_steps=holdout_steps,
                                    store_version=store.version)
            best = select_best(fitted.models)
            forecast = predict(best, series, horizon)
            ns = f"forecast.{metric}"
            store.append([FactRecord(object_id, ns, int(t), float(v))
                          for t, v in forecast.points])
            forecast_summary[f"{object_id}/{metric}"] = {
                "model": best.spec.label(),
                "holdout_mae": best.holdout_mae,
                "skipped": [spec.label() for spec, _ in fitted.skipped],
                "points": horizon,
            }
            if first_plot is None:
                tail = series.ts[-7 * 24:]
                actual = [(int(t), float(v)) for t, v in
                          zip(tail, series.values[-7 * 24:])]
                first_plot = (object_id, metric, actual, forecast.points)

    # 5. hyper table over the cursor window (last hours plus the forecast horizon)
    hierarchy = HierarchyMap(cfg.hierarchy)
    builder = HyperTableBuilder(store, hierarchy)
    mode = cfg.default_mode()
    cursor = TimeCursor(window_to - cfg.report.cursor_hours * 3600,
                        window_to + horizon * 3600, "archive")
    table = builder.build(mode, cursor)
    for name, path in to_report(table).write(out).items():
        track(f"hypertable_{name}", Path(path))

    # 6. map layer
    geo_path = out / "map.geojson"
    collection, missing_coords = export_geojson(table, device_map.object_coords(), geo_path)
    track("map", geo_path)

    # 7. figures alongside the delimited reports
    if cfg.report.figures:
        p = report_mod.fig_ranking(ranking, figures_dir / "top_consumers.png",
                                   title=f"Top heat consumers ({cfg.name})")
        track("fig_top_consumers", Path(p))
        if first_plot is not None:
            object_id, metric, actual, points = first_plot
            p = report_mod.fig_series_vs_forecast(
                actual, points, figures_dir / f"forecast_{object_id}_{metric}.png",
                title=f"{object_id} {metric}: actuals and forecast")
            track("fig_forecast", Path(p))
        if table.root.children:
            p = report_mod.fig_district_totals(
                table, mode.visible_columns[0], figures_dir / "district_totals.png")
            track("fig_district_totals", Path(p))

    manifest = {
        "scenario": cfg.name,
        "seed": cfg.seed,
        "duration_hours": cfg.duration_hours,
        "window": {"ts_from": window_from, "ts_to": window_to},
        "counts": {
            "readings_generated": sim.readings_generated,
            "frames_delivered": len(frames),
            "frames_cellular": sim.cellular_frames,
            "readings_delivered": sum(len(f.payload) for f in frames),
            "readings_buffered": sim.buffered_readings(),
            "rejects": len(rejects),
            "records_immersed": receipt.count,
            "leak_alerts": len(sim.alerts),
            "unmapped_objects": list(table.unmapped),
            "objects_without_coordinates": missing_coords,
        },
        "store": {
            "version": store.version,
            "objects": store.objects(),
            "path": str(cfg.store.path),
        },
        "top_consumers": [{"key": p.key, "value": p.value} for p in ranking.pairs],
        "forecasts": forecast_summary,
        "leaks": [a.to_json() for a in sim.alerts],
        "artifacts": artifacts,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2),
                             encoding="utf-8")
    return manifest
