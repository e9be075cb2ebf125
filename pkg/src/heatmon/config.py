"""Scenario configuration: one file drives simulation, ingest, store,
analytics, forecasting and the API service.

TOML and JSON files are both accepted; relative store/output paths
resolve against the config file's directory. Environment overrides:
``HEATMON_STORE_PATH`` and ``HEATMON_API_TOKEN``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:   # Python 3.10
    import tomli as tomllib

from .errors import ConfigError
from .hypertable import AggMode, ColorRule
from .store.blocks import DEFAULT_BLOCK_SIZE_LIMIT
from .store.cache import DEFAULT_CACHE_CAPACITY


@dataclass
class StoreSettings:
    path: Path
    nodes: int = 3
    replication: int = 2
    block_size_limit: int = DEFAULT_BLOCK_SIZE_LIMIT
    cache_capacity: int = DEFAULT_CACHE_CAPACITY


@dataclass
class ForecastSettings:
    grid: tuple = ("seasonal_naive:24", "moving_average:3", "moving_average:24",
                   "linear_exog:1,2,24,168", "linear_exog:1,2,24,168+exog")
    horizon: int = 24
    holdout_days: int = 14
    threshold: float = 0.15
    eval_window: int = 24
    exog_object: Optional[str] = None
    exog_metric: str = "supply_temp_c"
    targets: tuple = ("heat_energy_kwh",)
    objects: tuple = ()      # empty: every hierarchy object

    @property
    def holdout_steps(self) -> int:
        return self.holdout_days * 24


@dataclass
class ApiSettings:
    host: str = "127.0.0.1"
    port: int = 8787
    token: Optional[str] = None
    cors: tuple = ()
    page_limit: int = 500


@dataclass
class ReportSettings:
    top_k: int = 5
    workers: int = 2
    cursor_hours: int = 24
    figures: bool = True


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    duration_hours: int
    start_epoch: int
    out_dir: Path
    store: StoreSettings
    mesh: dict = field(default_factory=dict)
    devices: list = field(default_factory=list)
    hierarchy: list = field(default_factory=list)
    units: dict = field(default_factory=dict)
    expected_interval: int = 3600
    forecast: ForecastSettings = field(default_factory=ForecastSettings)
    leaks: list = field(default_factory=list)
    aggmodes: dict = field(default_factory=dict)
    api: ApiSettings = field(default_factory=ApiSettings)
    report: ReportSettings = field(default_factory=ReportSettings)
    base_dir: Path = Path(".")

    def resolve_store_path(self, out_dir: Path = None) -> Path:
        override = os.environ.get("HEATMON_STORE_PATH")
        if override:
            return Path(override)
        if self.store.path.is_absolute():
            return self.store.path
        return Path(out_dir or self.out_dir) / self.store.path

    def default_mode(self) -> AggMode:
        if not self.aggmodes:
            raise ConfigError("no aggregation modes configured")
        if "default" in self.aggmodes:
            return self.aggmodes["default"]
        return self.aggmodes[sorted(self.aggmodes)[0]]


def _mode_from_table(mode_id: str, table: dict) -> AggMode:
    rules = tuple(
        ColorRule(r["column"], tuple(r["thresholds"]), tuple(r["classes"]))
        for r in table.get("colors", ())
    )
    return AggMode(
        mode_id=mode_id,
        visible_columns=tuple(table["visible_columns"]),
        levels=tuple(table.get("levels", ("city", "district", "network", "object"))),
        agg_per_column=tuple(sorted(table.get("agg_per_column", {}).items())),
        color_rules=rules,
        grain=table.get("grain", "hour"),
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    if path.suffix == ".json":
        raw = json.loads(path.read_text())
    else:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    try:
        return _parse(raw, path.parent)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc


def _parse(raw: dict, base_dir: Path) -> ScenarioConfig:
    scenario = raw.get("scenario", {})
    store_raw = raw.get("store", {})
    store = StoreSettings(
        path=Path(store_raw.get("path", "store")),
        nodes=int(store_raw.get("nodes", 3)),
        replication=int(store_raw.get("replication", 2)),
        block_size_limit=int(store_raw.get("block_size_limit", DEFAULT_BLOCK_SIZE_LIMIT)),
        cache_capacity=int(store_raw.get("cache_capacity", DEFAULT_CACHE_CAPACITY)),
    )
    fc_raw = raw.get("forecast", {})
    forecast = ForecastSettings(
        grid=tuple(fc_raw.get("grid", ForecastSettings.grid)),
        horizon=int(fc_raw.get("horizon", 24)),
        holdout_days=int(fc_raw.get("holdout_days", 14)),
        threshold=float(fc_raw.get("threshold", 0.15)),
        eval_window=int(fc_raw.get("eval_window", 24)),
        exog_object=fc_raw.get("exog_object"),
        exog_metric=fc_raw.get("exog_metric", "supply_temp_c"),
        targets=tuple(fc_raw.get("targets", ("heat_energy_kwh",))),
        objects=tuple(fc_raw.get("objects", ())),
    )
    api_raw = raw.get("api", {})
    api = ApiSettings(
        host=api_raw.get("host", "127.0.0.1"),
        port=int(api_raw.get("port", 8787)),
        token=os.environ.get("HEATMON_API_TOKEN", api_raw.get("token")),
        cors=tuple(api_raw.get("cors", ())),
        page_limit=int(api_raw.get("page_limit", 500)),
    )
    report_raw = raw.get("report", {})
    report = ReportSettings(
        top_k=int(report_raw.get("top_k", 5)),
        workers=int(report_raw.get("workers", 2)),
        cursor_hours=int(report_raw.get("cursor_hours", 24)),
        figures=bool(report_raw.get("figures", True)),
    )
    aggmodes = {
        mode_id: _mode_from_table(mode_id, table)
        for mode_id, table in raw.get("aggmode", {}).items()
    }
    out_dir = Path(scenario.get("out_dir", "out"))
    if not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    return ScenarioConfig(
        name=scenario.get("name", "scenario"),
        seed=int(scenario.get("seed", 0)),
        duration_hours=int(scenario.get("duration_hours", 24)),
        start_epoch=int(scenario.get("start_epoch", 1609459200)),
        out_dir=out_dir,
        store=store,
        mesh=raw.get("mesh", {}),
        devices=list(raw.get("devices", ())),
        hierarchy=list(raw.get("hierarchy", ())),
        units=raw.get("units", {}),
        expected_interval=int(raw.get("ingest", {}).get("expected_interval", 3600)),
        forecast=forecast,
        leaks=list(raw.get("leaks", ())),
        aggmodes=aggmodes,
        api=api,
        report=report,
        base_dir=base_dir,
    )
