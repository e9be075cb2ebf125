"""Single entry point: scenario runs, store administration, analytics,
forecasting, GeoJSON export and the API server.

Exit codes: 0 ok, 1 validation/config fault, 2 runtime fault,
3 audit failure.
"""

from __future__ import annotations

import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import report as report_mod
from .api import serve as api_serve
from .config import ScenarioConfig, load_config
from .errors import ConfigError, HeatmonError
from .fixtures import SyntheticSource, kuznetsk_small, write_scenario_toml
from .forecast import (
    CorrectionPolicy,
    fit_candidates,
    grid_from_labels,
    online_correct,
    predict,
    select_best,
)
from .forecast.source import load_series
from .geo import export_geojson
from .hypertable import HierarchyMap, HyperTableBuilder, TimeCursor, to_report
from .ingest import Batch, DeviceMap, UnitRegistry, consolidate, immerse, normalize, read_ndjson, write_rejects
from .mapreduce import JobSpec, run_job
from .mesh import LeakEvent, MeshSimulation, build_topology, write_alerts, write_trace
from .scenario import scenario_run
from .store import CubeStore, FactRecord, SliceSpec


def parse_ts(value: str) -> int:
    """Epoch seconds, or ISO dates like 2021-01-15 / 2021-01-15T06:00."""
    try:
        return int(value)
    except ValueError:
        pass
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def open_store(cfg: ScenarioConfig) -> CubeStore:
    return CubeStore(cfg.resolve_store_path(),
                     node_count=cfg.store.nodes, replication=cfg.store.replication,
                     block_size_limit=cfg.store.block_size_limit,
                     cache_capacity=cfg.store.cache_capacity)


@click.group()
@click.option("--config", "-c", "config_path", type=click.Path(), default="scenario.toml",
              show_default=True, help="Scenario config file (TOML or JSON).")
@click.pass_context
def cli(ctx, config_path):
    """Desk-scale heat-supply monitoring: simulate, store, analyze, serve."""
    ctx.obj = {"config_path": config_path}


def get_config(ctx) -> ScenarioConfig:
    return load_config(ctx.obj["config_path"])


@cli.command()
@click.option("--preset", default="kuznetsk-small", show_default=True)
@click.option("--dir", "target", type=click.Path(), default=".", show_default=True)
@click.option("--duration-hours", default=840, show_default=True)
@click.option("--seed", default=1307, show_default=True)
def init(preset, target, duration_hours, seed):
    """Write a runnable scenario config for a named preset."""
    if preset != "kuznetsk-small":
        raise ConfigError(f"unknown preset {preset!r}")
    path = Path(target) / "scenario.toml"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_scenario_toml(kuznetsk_small(seed), path, duration_hours=duration_hours)
    click.echo(f"wrote {path}")
    click.echo(f"next: heatmon -c {path} run")


@cli.command()
@click.option("--out-dir", type=click.Path(), default=None,
              help="Override the scenario out_dir.")
@click.pass_context
def run(ctx, out_dir):
    """Full pipeline: simulate, ingest, aggregate, forecast, report."""
    cfg = get_config(ctx)
    manifest = scenario_run(cfg, out_dir=out_dir)
    out = Path(out_dir or cfg.out_dir)
    click.echo(f"scenario {manifest['scenario']} complete")
    click.echo(json.dumps(manifest["counts"], indent=2, sort_keys=True))
    click.echo(f"artifacts in {out}")


@cli.command()
@click.option("--hours", type=int, default=None, help="Simulated hours (default: scenario duration).")
@click.option("--trace", type=click.Path(), default=None, help="Frame trace NDJSON path.")
@click.option("--alerts", "alerts_path", type=click.Path(), default=None)
@click.pass_context
def simulate(ctx, hours, trace, alerts_path):
    """Run only the mesh simulation and dump the frame trace."""
    cfg = get_config(ctx)
    hours = hours or cfg.duration_hours
    mesh = build_topology(cfg.mesh)
    sim = MeshSimulation(mesh, seed=cfg.seed)
    for leak in cfg.leaks:
        sim.inject_leak(LeakEvent(leak["pipeline_id"], float(leak["true_pos"]),
                                  int(leak["onset"]), float(leak.get("severity", 1.0))))
    mapped = {d["device_id"]: d["object_id"] for d in cfg.devices}
    pairs = [(dev, mapped.get(dev, dev)) for dev in mesh.end_devices()]
    frames = sim.run(hours * 3600, SyntheticSource(cfg.seed, cfg.start_epoch, pairs, hours))
    if trace:
        write_trace(frames, trace)
    if alerts_path:
        write_alerts(sim.alerts, alerts_path)
    click.echo(json.dumps({
        "frames": len(frames),
        "readings_generated": sim.readings_generated,
        "readings_delivered": sum(len(f.payload) for f in frames),
        "readings_buffered": sim.buffered_readings(),
        "cellular_frames": sim.cellular_frames,
        "leak_alerts": len(sim.alerts),
    }, sort_keys=True))


@cli.command("ingest")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="NDJSON file of raw readings.")
@click.option("--source", type=click.Choice(["mesh", "cellular", "file"]), default="file")
@click.option("--batch-id", default=None)
@click.option("--rejects", "rejects_path", type=click.Path(), default=None)
@click.pass_context
def ingest_cmd(ctx, input_path, source, batch_id, rejects_path):
    """Normalize and immerse a raw NDJSON batch into the store."""
    cfg = get_config(ctx)
    raws = read_ndjson(input_path)
    result = normalize(raws, UnitRegistry(cfg.units), DeviceMap.from_rows(cfg.devices))
    if result.rejects and rejects_path:
        write_rejects(result.rejects, rejects_path)
    batch = consolidate([Batch(Path(input_path).name, result.readings, source)],
                        batch_id=batch_id, expected_interval=cfg.expected_interval)
    receipt = immerse(batch, open_store(cfg))
    click.echo(json.dumps({
        "batch_id": receipt.batch_id, "count": receipt.count,
        "duplicate": receipt.duplicate, "rejects": len(result.rejects),
        "store_version": receipt.store_version,
    }, sort_keys=True))
    if not result.readings and result.rejects:
        sys.exit(1)


@cli.command()
@click.option("--map", "map_fn", default="object_value", show_default=True)
@click.option("--reduce", "reduce_fn", default="sum", show_default=True)
@click.option("--metric", default="heat_energy_kwh", show_default=True)
@click.option("--from", "ts_from", required=True, help="Window start (epoch or ISO).")
@click.option("--to", "ts_to", required=True, help="Window end (epoch or ISO).")
@click.option("--workers", default=1, show_default=True)
@click.option("--top", "top_k", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write JSON here too.")
@click.option("--figure", type=click.Path(), default=None, help="Render a bar chart PNG.")
@click.pass_context
def aggregate(ctx, map_fn, reduce_fn, metric, ts_from, ts_to, workers, top_k, fmt, out_path, figure):
    """Run a map-reduce job over a store slice."""
    cfg = get_config(ctx)
    store = open_store(cfg)
    spec = JobSpec(
        input=SliceSpec.make(None, [metric], parse_ts(ts_from), parse_ts(ts_to), "raw", None),
        map_fn=map_fn, reduce_fn=reduce_fn, workers=workers, top_k=top_k)
    result = run_job(spec, store)
    if fmt == "json":
        click.echo(report_mod.agg_result_json(result))
    else:
        click.echo(report_mod.agg_result_table(result), nl=False)
    if out_path:
        Path(out_path).write_text(report_mod.agg_result_json(result), encoding="utf-8")
    if figure:
        report_mod.fig_ranking(result, figure, title=f"{reduce_fn} of {metric} by {map_fn}")


@cli.group()
def forecast():
    """Fit, predict and watch forecast models."""


@forecast.command("fit")
@click.option("--object", "object_id", required=True)
@click.option("--metric", default="heat_energy_kwh", show_default=True)
@click.pass_context
def forecast_fit(ctx, object_id, metric):
    """Fit the candidate grid and report the selected model."""
    cfg = get_config(ctx)
    store = open_store(cfg)
    series = load_series(store, object_id, metric,
                         exog_object=cfg.forecast.exog_object,
                         exog_metric=cfg.forecast.exog_metric)
    result = fit_candidates(series, grid_from_labels(cfg.forecast.grid),
                            holdout_steps=cfg.forecast.holdout_steps,
                            store_version=store.version)
    best = select_best(result.models)
    click.echo(json.dumps({
        "selected": best.to_json(),
        "candidates": [m.to_json() for m in result.models],
        "skipped": [{"model": s.label(), "reason": r} for s, r in result.skipped],
    }, indent=2, sort_keys=True))


@forecast.command("predict")
@click.option("--object", "object_id", required=True)
@click.option("--metric", default="heat_energy_kwh", show_default=True)
@click.option("--horizon", type=int, default=None)
@click.option("--scenario", "scenario_ns", default=None,
              help="Persist under the what-if namespace forecast.<scenario>.<metric>.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def forecast_predict(ctx, object_id, metric, horizon, scenario_ns, out_path):
    """Fit, select, forecast and persist into the store's forecast namespace."""
    cfg = get_config(ctx)
    store = open_store(cfg)
    horizon = horizon or cfg.forecast.horizon
    series = load_series(store, object_id, metric,
                         exog_object=cfg.forecast.exog_object,
                         exog_metric=cfg.forecast.exog_metric,
                         exog_extend=horizon * 3600)
    best = select_best(fit_candidates(series, grid_from_labels(cfg.forecast.grid),
                                      holdout_steps=cfg.forecast.holdout_steps,
                                      store_version=store.version).models)
    fc = predict(best, series, horizon)
    ns = f"forecast.{scenario_ns + '.' if scenario_ns else ''}{metric}"
    store.append([FactRecord(object_id, ns, int(t), float(v)) for t, v in fc.points])
    payload = json.dumps(fc.to_json(), indent=2, sort_keys=True)
    click.echo(payload)
    if out_path:
        Path(out_path).write_text(payload, encoding="utf-8")


@forecast.command("watch")
@click.option("--object", "object_id", required=True)
@click.option("--metric", default="heat_energy_kwh", show_default=True)
@click.option("--anchor-fraction", default=0.7, show_default=True,
              help="Fit on this fraction of history, then replay the rest.")
@click.pass_context
def forecast_watch(ctx, object_id, metric, anchor_fraction):
    """Replay stored actuals step by step, applying online correction."""
    cfg = get_config(ctx)
    store = open_store(cfg)
    grid = grid_from_labels(cfg.forecast.grid)
    policy = CorrectionPolicy(cfg.forecast.threshold, cfg.forecast.eval_window)
    series = load_series(store, object_id, metric,
                         exog_object=cfg.forecast.exog_object,
                         exog_metric=cfg.forecast.exog_metric)
    anchor = max(int(len(series) * anchor_fraction), 1)
    model = select_best(fit_candidates(series.head(anchor), grid,
                                       holdout_steps=cfg.forecast.holdout_steps,
                                       store_version=store.version).models)
    click.echo(f"anchor model: {model.spec.label()} (holdout MAE {model.holdout_mae:.4f})")
    refits = 0
    for n in range(anchor + 1, len(series) + 1):
        decision = online_correct(model, series.head(n), policy, grid=grid,
                                  holdout_steps=cfg.forecast.holdout_steps)
        if decision.action == "refit":
            refits += 1
            model = decision.model
            click.echo(f"step {n}: rolling error {decision.rolling_error:.4f} "
                       f"> {policy.threshold} -> refit to {model.spec.label()}")
    click.echo(json.dumps({"steps": len(series) - anchor, "refits": refits,
                           "final_model": model.spec.label()}, sort_keys=True))


@cli.command()
@click.option("--mode", "mode_id", default="default", show_default=True)
@click.option("--from", "ts_from", required=True)
@click.option("--to", "ts_to", required=True)
@click.option("--cursor-mode", type=click.Choice(["archive", "current", "forecast", "scenario"]),
              default="archive", show_default=True)
@click.option("--scenario", "scenario_ns", default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--figures/--no-figures", default=False)
@click.pass_context
def hypertable(ctx, mode_id, ts_from, ts_to, cursor_mode, scenario_ns, out_dir, figures):
    """Build the decision table and write text/JSON/CSV reports."""
    cfg = get_config(ctx)
    store = open_store(cfg)
    mode = cfg.aggmodes.get(mode_id)
    if mode is None:
        raise ConfigError(f"aggregation mode {mode_id!r} not configured")
    cursor = TimeCursor(parse_ts(ts_from), parse_ts(ts_to), cursor_mode, scenario_ns)
    table = HyperTableBuilder(store, HierarchyMap(cfg.hierarchy)).build(mode, cursor)
    report = to_report(table)
    click.echo(report.to_text(), nl=False)
    if out_dir:
        paths = report.write(out_dir)
        if figures and table.root.children:
            paths["figure"] = report_mod.fig_district_totals(
                table, mode.visible_columns[0], Path(out_dir) / "figures" / "district_totals.png")
        click.echo(json.dumps({"written": paths}, indent=2, sort_keys=True))


@cli.command("export-geojson")
@click.option("--mode", "mode_id", default="default", show_default=True)
@click.option("--from", "ts_from", required=True)
@click.option("--to", "ts_to", required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
def export_geojson_cmd(ctx, mode_id, ts_from, ts_to, out_path):
    """Export hyper-table leaves as a GeoJSON FeatureCollection."""
    cfg = get_config(ctx)
    store = open_store(cfg)
    mode = cfg.aggmodes.get(mode_id)
    if mode is None:
        raise ConfigError(f"aggregation mode {mode_id!r} not configured")
    cursor = TimeCursor(parse_ts(ts_from), parse_ts(ts_to))
    table = HyperTableBuilder(store, HierarchyMap(cfg.hierarchy)).build(mode, cursor)
    collection, missing = export_geojson(
        table, DeviceMap.from_rows(cfg.devices).object_coords(), out_path)
    click.echo(json.dumps({"features": len(collection["features"]),
                           "missing_coordinates": missing, "out": str(out_path)},
                          sort_keys=True))


@cli.group()
def store():
    """Storage-cluster administration."""


@store.command()
@click.pass_context
def audit(ctx):
    """Verify replica placement and block checksums; exit 3 on violations."""
    cfg = get_config(ctx)
    report = open_store(cfg).audit()
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    if not report.ok:
        sys.exit(3)


@store.command("fail-node")
@click.argument("node_id")
@click.pass_context
def fail_node(ctx, node_id):
    cfg = get_config(ctx)
    state = open_store(cfg).fail_node(node_id)
    click.echo(json.dumps({"failed": list(state.failed), "live": list(state.live)},
                          sort_keys=True))


@store.command("recover-node")
@click.argument("node_id")
@click.pass_context
def recover_node(ctx, node_id):
    cfg = get_config(ctx)
    state = open_store(cfg).recover_node(node_id)
    click.echo(json.dumps({"failed": list(state.failed), "live": list(state.live),
                           "repaired": state.repaired, "unrepaired": state.unrepaired},
                          sort_keys=True))


@cli.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Serve a dashboard build under /ui.")
@click.pass_context
def serve(ctx, host, port, static_dir):
    """Run the HTTP API for dashboards and scripts."""
    cfg = get_config(ctx)
    api_serve(cfg, host=host, port=port, static_dir=static_dir)


def main():
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except HeatmonError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
