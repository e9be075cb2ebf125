"""Deterministic synthetic fixtures.

``kuznetsk_small`` is the canonical desk-scale corpus: 12 heating points
in 3 districts, 5 metrics at hourly grain, plus a weather pseudo-object
whose supply_temp_c channel carries outdoor temperature (the exogenous
series for forecasting). Every value is a pure function of
(fixture seed, object, metric, hour), so any two runs agree regardless
of how the series are chunked or which path (mesh trace vs direct
append) produced them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ingest.normalize import RawReading
from .ingest.units import CANONICAL_METRICS
from .store import FactRecord

T0 = 1609459200  # 2021-01-01T00:00:00Z; 2021 is not a leap year: 8760 hours
YEAR_HOURS = 8760
MAX_HOURS = 2 * YEAR_HOURS

CANONICAL_UNIT = {
    "heat_energy_kwh": "kwh",
    "flow_m3h": "m3h",
    "supply_temp_c": "c",
    "return_temp_c": "c",
    "electric_kwh": "kwh",
}

DISTRICTS = ("north", "center", "south")


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    seed: int
    n_objects: int = 12
    epoch: int = T0
    weather_object: str = "weather-kuznetsk"
    weather_device: str = "weather-1"

    @property
    def objects(self):
        return tuple(f"obj-{i + 1:02d}" for i in range(self.n_objects))

    @property
    def devices(self):
        return tuple(f"dev-{i + 1:02d}" for i in range(self.n_objects))

    def district_of(self, object_id: str) -> str:
        idx = self.objects.index(object_id)
        return DISTRICTS[idx * len(DISTRICTS) // self.n_objects]

    def network_of(self, object_id: str) -> str:
        idx = self.objects.index(object_id)
        district = self.district_of(object_id)
        return f"net-{district}-{'ab'[idx % 2]}"


def kuznetsk_small(seed: int = 1307) -> FixtureSpec:
    return FixtureSpec("kuznetsk-small", seed)


# --- synthetic series ---------------------------------------------------

def _stable_idx(object_id: str) -> int:
    return int.from_bytes(hashlib.sha256(object_id.encode()).digest()[:4], "big")


def _noise(seed: int, object_idx: int, metric_idx: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, object_idx, metric_idx]))
    return rng.standard_normal(n)


@lru_cache(maxsize=256)
def synthetic_series(seed: int, object_id: str, metric: str) -> np.ndarray:
    """Full synthetic series for one (object, metric); "__weather__" is the
    shared outdoor-temperature driver."""
    h = np.arange(MAX_HOURS, dtype=np.float64)
    if object_id == "__weather__":
        eps = _noise(seed, 999, 0, MAX_HOURS)
        return (4.0
                - 14.0 * np.cos(2 * np.pi * (h - 240.0) / YEAR_HOURS)
                + 4.0 * np.sin(2 * np.pi * h / 24.0 - 2.5)
                + 0.4 * eps)
    oi = _stable_idx(object_id)
    mi = CANONICAL_METRICS.index(metric)
    eps = _noise(seed, oi, mi, MAX_HOURS)
    params = np.random.default_rng(np.random.SeedSequence([seed, oi, 7777]))
    base = params.uniform(5.0, 15.0)
    slope = params.uniform(1.5, 4.5)
    temp = synthetic_series(seed, "__weather__", "supply_temp_c")
    hdd = np.clip(18.0 - temp, 0.0, None)
    if metric == "heat_energy_kwh":
        return np.clip(base + slope * hdd + 0.8 * eps, 0.0, None)
    if metric == "flow_m3h":
        heat = synthetic_series(seed, object_id, "heat_energy_kwh")
        return np.clip(0.035 * heat + 1.0 + 0.05 * eps, 0.1, None)
    if metric == "supply_temp_c":
        return 65.0 + 0.9 * hdd + 0.5 * eps
    if metric == "return_temp_c":
        heat = synthetic_series(seed, object_id, "heat_energy_kwh")
        supply = synthetic_series(seed, object_id, "supply_temp_c")
        return supply - (18.0 + 0.1 * heat + 0.3 * eps)
    if metric == "electric_kwh":
        daily = 1.0 + 0.8 * np.sin(2 * np.pi * ((h % 24.0) - 6.0) / 24.0)
        weekend = np.where((h // 24.0) % 7 >= 5, 0.85, 1.0)
        return np.clip((3.0 + 2.2 * daily) * weekend + 0.3 * eps, 0.0, None)
    raise ValueError(f"unknown metric {metric!r}")


def series_values(fx: FixtureSpec, object_id: str, metric: str, hours) -> np.ndarray:
    """Values for the given hour indices (0-based hours since fixture epoch)."""
    key = "__weather__" if object_id == fx.weather_object else object_id
    arr = synthetic_series(fx.seed, key, metric)
    return arr[np.asarray(hours, dtype=np.int64)]


def reading_value(fx: FixtureSpec, object_id: str, metric: str, hour: int) -> float:
    return float(series_values(fx, object_id, metric, [hour])[0])


# --- config material ------------------------------------------------------

def device_rows(fx: FixtureSpec):
    rows = []
    for i, (dev, obj) in enumerate(zip(fx.devices, fx.objects)):
        rows.append({"device_id": dev, "object_id": obj,
                     "lon": round(46.58 + 0.012 * (i % 4), 5),
                     "lat": round(53.10 + 0.010 * (i // 4), 5)})
    rows.append({"device_id": fx.weather_device, "object_id": fx.weather_object,
                 "lon": 46.60, "lat": 53.12})
    return rows


def hierarchy_rows(fx: FixtureSpec):
    return [
        {"object_id": obj, "city": "kuznetsk",
         "district": fx.district_of(obj), "network": fx.network_of(obj)}
        for obj in fx.objects
    ]


def mesh_config(fx: FixtureSpec) -> dict:
    """3 segments, each one coordinator + 2 routers + 4 end devices (depth 2)."""
    segments = []
    per_segment = fx.n_objects // 3
    for s in range(3):
        devices = fx.devices[s * per_segment:(s + 1) * per_segment]
        routers = [{"id": f"rtr-{s + 1}-{r + 1}", "parent": f"coord-{s + 1}"} for r in range(2)]
        end_devices = [
            {"id": dev, "parent": routers[i % 2]["id"]}
            for i, dev in enumerate(devices)
        ]
        segments.append({
            "segment_id": f"seg-{s + 1}",
            "coordinator": f"coord-{s + 1}",
            "routers": routers,
            "end_devices": end_devices,
        })
    return {
        "segments": segments,
        "pipelines": [{"pipeline_id": "heat-main-1", "length_m": 1500, "spacing": 300}],
    }


class SyntheticSource:
    """Meter-reading source for the mesh simulation.

    Hour h's readings are generated at simulation second 3600*(h+1), i.e.
    when the metering interval closes, and stamped with the interval
    start so windows line up with the direct-append fixture path.
    """

    def __init__(self, seed: int, epoch: int, device_objects, hours: int,
                 weather_object: str = None):
        self.seed = seed
        self.epoch = epoch
        self.hours = hours
        self.weather_object = weather_object
        self._pairs = sorted(device_objects)

    def _value(self, obj: str, metric: str, h: int) -> float:
        key = "__weather__" if obj == self.weather_object else obj
        return float(synthetic_series(self.seed, key, metric)[h])

    def generation_times(self, until):
        return [3600 * (h + 1) for h in range(self.hours) if 3600 * (h + 1) <= until]

    def readings_at(self, t):
        h = t // 3600 - 1
        out = []
        for dev, obj in self._pairs:
            for metric in CANONICAL_METRICS:
                out.append((dev, RawReading(
                    dev, metric, self.epoch + 3600 * h,
                    self._value(obj, metric, h),
                    CANONICAL_UNIT[metric])))
        return out


def FixtureSource(fx: FixtureSpec, hours: int) -> SyntheticSource:
    return SyntheticSource(fx.seed, fx.epoch, zip(fx.devices, fx.objects),
                           hours, fx.weather_object)


def weather_raw_readings(fx: FixtureSpec, hours: int):
    """Outdoor temperature as an NDJSON-style batch riding the file path."""
    return [
        RawReading(fx.weather_device, "supply_temp_c", fx.epoch + 3600 * h,
                   reading_value(fx, fx.weather_object, "supply_temp_c", h), "c")
        for h in range(hours)
    ]


def build_store_fixture(store, fx: FixtureSpec, hours: int = YEAR_HOURS,
                        include_weather: bool = True) -> int:
    """Append the fixture series directly (bypassing the mesh), in monthly
    batches so multi-block and multi-group paths get exercised. Returns the
    number of object records appended (weather excluded)."""
    total = 0
    month_edges = _month_edges(fx.epoch, hours)
    for mi in range(len(month_edges) - 1):
        h0, h1 = month_edges[mi], month_edges[mi + 1]
        hour_idx = np.arange(h0, h1)
        records = []
        for obj in fx.objects:
            for metric in CANONICAL_METRICS:
                vals = series_values(fx, obj, metric, hour_idx)
                ts0 = fx.epoch
                records.extend(
                    FactRecord(obj, metric, int(ts0 + 3600 * h), float(v))
                    for h, v in zip(hour_idx, vals))
        if include_weather:
            vals = series_values(fx, fx.weather_object, "supply_temp_c", hour_idx)
            records.extend(
                FactRecord(fx.weather_object, "supply_temp_c", int(fx.epoch + 3600 * h), float(v))
                for h, v in zip(hour_idx, vals))
        store.append(records, batch_id=f"{fx.name}-m{mi:02d}")
        total += (h1 - h0) * len(fx.objects) * len(CANONICAL_METRICS)
    return total


def _month_edges(epoch: int, hours: int):
    """Hour offsets of month boundaries within [0, hours], ends included."""
    start = np.datetime64(epoch, "s")
    edges = [0]
    h = 0
    while h < hours:
        month = (start + np.timedelta64(h * 3600, "s")).astype("datetime64[M]")
        nxt = (month + 1).astype("datetime64[s]")
        nxt_h = int((nxt - start) // np.timedelta64(3600, "s"))
        h = min(nxt_h, hours)
        edges.append(h)
    return edges


# --- scenario config writer -------------------------------------------------

def _toml_inline(row: dict) -> str:
    parts = []
    for k, v in row.items():
        if isinstance(v, str):
            parts.append(f'{k} = "{v}"')
        elif isinstance(v, bool):
            parts.append(f"{k} = {str(v).lower()}")
        else:
            parts.append(f"{k} = {v}")
    return "{" + ", ".join(parts) + "}"


def write_scenario_toml(fx: FixtureSpec, path, duration_hours: int = 840,
                        leak: bool = True) -> str:
    """Write a complete, runnable scenario config for the fixture."""
    mesh = mesh_config(fx)
    lines = [
        "[scenario]",
        f'name = "{fx.name}"',
        f"seed = {fx.seed}",
        f"duration_hours = {duration_hours}",
        f"start_epoch = {fx.epoch}",
        'out_dir = "out"',
        "",
        "[store]",
        'path = "store"',
        "nodes = 3",
        "replication = 2",
        "",
        "[ingest]",
        "expected_interval = 3600",
        "",
        "[forecast]",
        'grid = ["seasonal_naive:24", "moving_average:3", "moving_average:24",'
        ' "linear_exog:1,2,24,168", "linear_exog:1,2,24,168+exog"]',
        "horizon = 24",
        "threshold = 0.15",
        "eval_window = 24",
        f'exog_object = "{fx.weather_object}"',
        'exog_metric = "supply_temp_c"',
        'targets = ["heat_energy_kwh"]',
        "",
        "[report]",
        "top_k = 5",
        "workers = 2",
        "cursor_hours = 24",
        "",
        "[api]",
        'host = "127.0.0.1"',
        "port = 8787",
        'token = "dev-token"',
        'cors = ["*"]',
        "",
        "[mesh]",
        "max_tree_depth = 5",
        "",
        "[mesh.duty]",
        "wake_period = 900",
        "awake_window = 10",
        "",
        "[mesh.fallback]",
        "enabled = true",
        "timeout = 1800",
        "cellular_latency = 60",
    ]
    for seg in mesh["segments"]:
        lines += [
            "",
            "[[mesh.segments]]",
            f'segment_id = "{seg["segment_id"]}"',
            f'coordinator = "{seg["coordinator"]}"',
            "routers = [" + ", ".join(_toml_inline(r) for r in seg["routers"]) + "]",
            "end_devices = [" + ", ".join(_toml_inline(d) for d in seg["end_devices"]) + "]",
        ]
    for p in mesh["pipelines"]:
        lines += ["", "[[mesh.pipelines]]"] + [
            f'pipeline_id = "{p["pipeline_id"]}"',
            f"length_m = {p['length_m']}",
            f"spacing = {p['spacing']}",
        ]
    if leak:
        lines += [
            "",
            "[[leaks]]",
            'pipeline_id = "heat-main-1"',
            "true_pos = 450.0",
            "onset = 7200",
            "severity = 0.8",
        ]
    for row in device_rows(fx):
        lines += ["", "[[devices]]"] + [
            f'device_id = "{row["device_id"]}"',
            f'object_id = "{row["object_id"]}"',
            f"lon = {row['lon']}",
            f"lat = {row['lat']}",
        ]
    for row in hierarchy_rows(fx):
        lines += ["", "[[hierarchy]]"] + [
            f'object_id = "{row["object_id"]}"',
            f'city = "{row["city"]}"',
            f'district = "{row["district"]}"',
            f'network = "{row["network"]}"',
        ]
    lines += [
        "",
        "[aggmode.default]",
        'visible_columns = ["heat_energy_kwh", "flow_m3h", "forecast.heat_energy_kwh"]',
        'levels = ["city", "district", "network", "object"]',
        'grain = "hour"',
        "",
        "[aggmode.default.agg_per_column]",
        'heat_energy_kwh = "sum"',
        'flow_m3h = "sum"',
        '"forecast.heat_energy_kwh" = "sum"',
        "",
        "[[aggmode.default.colors]]",
        'column = "heat_energy_kwh"',
        "thresholds = [400.0, 900.0]",
        'classes = ["low", "mid", "high"]',
        "",
        "[aggmode.compact]",
        'visible_columns = ["heat_energy_kwh"]',
        'levels = ["city", "district", "object"]',
        'grain = "day"',
    ]
    text = "\n".join(lines) + "\n"
    from pathlib import Path
    Path(path).write_text(text, encoding="utf-8")
    return text
