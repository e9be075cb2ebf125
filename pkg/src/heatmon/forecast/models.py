"""Forecast model family: transparent baselines behind one interface.

Three families: repeat-last-season (seasonal_naive), trailing-window
mean (moving_average) and lagged least squares with an optional
exogenous regressor (linear_exog, the regressor being outdoor
temperature). Multi-step prediction is recursive; negative raw
predictions clamp to zero since consumption cannot go negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DegenerateDesign, InsufficientLags, MissingExogenous

FAMILIES = ("seasonal_naive", "moving_average", "linear_exog")

GOOD, INTERPOLATED, SUSPECT, MISSING = 0, 1, 2, 3


@dataclass(frozen=True)
class ModelSpec:
    family: str
    season: Optional[int] = None      # seasonal_naive
    window: Optional[int] = None      # moving_average
    lags: tuple = ()                  # linear_exog
    use_exog: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "seasonal_naive" and (self.season is None or self.season < 1):
            raise ValueError("seasonal_naive needs season >= 1")
        if self.family == "moving_average" and (self.window is None or self.window < 1):
            raise ValueError("moving_average needs window >= 1")
        if self.family == "linear_exog":
            if not self.lags or any(l < 1 for l in self.lags):
                raise ValueError("linear_exog needs a non-empty positive lag set")

    @property
    def history_needed(self) -> int:
        if self.family == "seasonal_naive":
            return self.season
        if self.family == "moving_average":
            return self.window
        return max(self.lags)

    def label(self) -> str:
        if self.family == "seasonal_naive":
            return f"seasonal_naive:{self.season}"
        if self.family == "moving_average":
            return f"moving_average:{self.window}"
        lags = ",".join(str(l) for l in self.lags)
        return f"linear_exog:{lags}" + ("+exog" if self.use_exog else "")


def parse_model_spec(text: str) -> ModelSpec:
    """Inverse of ModelSpec.label(), used by config files and the CLI."""
    family, _, rest = text.partition(":")
    if family == "seasonal_naive":
        return ModelSpec(family, season=int(rest))
    if family == "moving_average":
        return ModelSpec(family, window=int(rest))
    if family == "linear_exog":
        use_exog = rest.endswith("+exog")
        if use_exog:
            rest = rest[:-len("+exog")]
        lags = tuple(int(x) for x in rest.split(",") if x)
        return ModelSpec(family, lags=lags, use_exog=use_exog)
    raise ValueError(f"cannot parse model spec {text!r}")


@dataclass
class SeriesWindow:
    """One (object, metric) series on a regular time grid.

    Holes in the underlying data appear as quality=missing points so
    positional lags stay aligned; fitting and scoring skip them.
    """

    object_id: str
    metric: str
    ts: np.ndarray
    values: np.ndarray
    quality: np.ndarray
    grain_seconds: int = 3600
    exog_ts: Optional[np.ndarray] = None
    exog_values: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.ts) > 1 and not (np.diff(self.ts) > 0).all():
            raise ValueError("series timestamps must be strictly increasing")

    def __len__(self):
        return len(self.ts)

    @classmethod
    def from_cells(cls, object_id, metric, cells, grain_seconds=3600, exog_cells=None):
        """Build from raw-grain slice cells, reindexed onto the regular grid."""
        pts = [(c.bucket_ts, c.value, c.quality) for c in cells
               if c.object_id == object_id and c.metric == metric]
        if not pts:
            raise ValueError(f"no data for ({object_id}, {metric})")
        pts.sort()
        t0, t1 = pts[0][0], pts[-1][0]
        grid = np.arange(t0, t1 + grain_seconds, grain_seconds, dtype=np.int64)
        values = np.zeros(len(grid))
        quality = np.full(len(grid), MISSING, dtype=np.int8)
        qcode = {"good": GOOD, "interpolated": INTERPOLATED, "suspect": SUSPECT, "missing": MISSING}
        for ts, value, q in pts:
            i = (ts - t0) // grain_seconds
            if grid[i] == ts:
                values[i] = value
                quality[i] = qcode[q]
        exog_ts = exog_values = None
        if exog_cells is not None:
            epts = sorted((c.bucket_ts, c.value) for c in exog_cells)
            exog_ts = np.array([t for t, _ in epts], dtype=np.int64)
            exog_values = np.array([v for _, v in epts])
        return cls(object_id, metric, grid, values, quality, grain_seconds, exog_ts, exog_values)

    def head(self, n: int) -> "SeriesWindow":
        return SeriesWindow(self.object_id, self.metric, self.ts[:n], self.values[:n],
                            self.quality[:n], self.grain_seconds, self.exog_ts, self.exog_values)

    def until_ts(self, ts: int) -> "SeriesWindow":
        n = int(np.searchsorted(self.ts, ts, side="right"))
        return self.head(n)

    def exog_at(self, ts_points: np.ndarray) -> np.ndarray:
        if self.exog_ts is None:
            raise MissingExogenous(f"({self.object_id}, {self.metric}) has no exogenous series")
        idx = np.searchsorted(self.exog_ts, ts_points)
        ok = (idx < len(self.exog_ts)) & (self.exog_ts[np.minimum(idx, len(self.exog_ts) - 1)] == ts_points)
        if not ok.all():
            missing_ts = np.asarray(ts_points)[~ok][:3]
            raise MissingExogenous(f"exogenous values missing at ts {missing_ts.tolist()}")
        return self.exog_values[idx]

    def usable_mask(self) -> np.ndarray:
        return self.quality <= INTERPOLATED


@dataclass
class FittedModel:
    spec: ModelSpec
    coefficients: tuple
    train_window: tuple           # [ts_from, ts_to)
    holdout_mae: float
    fitted_at_version: int = 0
    fit_series_end: int = 0       # ts of the last point seen at fit time

    @property
    def n_coefficients(self) -> int:
        return len(self.coefficients)

    def to_json(self) -> dict:
        return {
            "model": self.spec.label(),
            "coefficients": list(self.coefficients),
            "train_window": list(self.train_window),
            "holdout_mae": self.holdout_mae,
            "fitted_at_version": self.fitted_at_version,
        }


@dataclass
class Forecast:
    model: FittedModel
    horizon: int
    points: list            # [(ts, value >= 0)]

    def to_json(self) -> dict:
        return {
            "model": self.model.to_json(),
            "horizon": self.horizon,
            "points": [{"ts": int(t), "value": float(v)} for t, v in self.points],
        }


def fit_coefficients(spec: ModelSpec, series: SeriesWindow) -> tuple:
    """Fit on the given (training) series; naive families carry none."""
    if spec.family in ("seasonal_naive", "moving_average"):
        return ()
    max_lag = max(spec.lags)
    usable = series.usable_mask()
    rows = []
    targets = []
    exog = None
    if spec.use_exog:
        exog = series.exog_at(series.ts)
    for t in range(max_lag, len(series)):
        if not usable[t] or not all(usable[t - l] for l in spec.lags):
            continue
        feats = [1.0] + [series.values[t - l] for l in spec.lags]
        if spec.use_exog:
            feats.append(exog[t])
        rows.append(feats)
        targets.append(series.values[t])
    ncols = 1 + len(spec.lags) + (1 if spec.use_exog else 0)
    if len(rows) < ncols:
        raise DegenerateDesign(f"{spec.label()}: {len(rows)} usable rows < {ncols} parameters")
    x = np.asarray(rows)
    y = np.asarray(targets)
    coef, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < ncols:
        raise DegenerateDesign(f"{spec.label()}: singular design (rank {rank} < {ncols})")
    return tuple(float(c) for c in coef)


def forecast_values(spec: ModelSpec, coefficients, series: SeriesWindow, horizon: int) -> np.ndarray:
    """Recursive multi-step prediction continuing the series grid."""
    n = len(series)
    if n < spec.history_needed:
        raise InsufficientLags(
            f"{spec.label()} needs {spec.history_needed} points of history, have {n}")
    step = series.grain_seconds
    future_ts = series.ts[-1] + step * np.arange(1, horizon + 1)
    history = list(series.values)
    exog = None
    if spec.family == "linear_exog" and spec.use_exog:
        exog = series.exog_at(future_ts)
    out = np.empty(horizon)
    for h in range(horizon):
        if spec.family == "seasonal_naive":
            raw = history[-spec.season]
        elif spec.family == "moving_average":
            raw = float(np.mean(history[-spec.window:]))
        else:
            feats = [1.0] + [history[-l] for l in spec.lags]
            if spec.use_exog:
                feats.append(float(exog[h]))
            raw = float(np.dot(coefficients, feats))
        value = max(raw, 0.0)
        out[h] = value
        history.append(value)
    return out


def one_step_prediction(spec: ModelSpec, coefficients, series: SeriesWindow, i: int) -> float:
    """Prediction for index i given actual history up to i-1; clamped at 0."""
    if i < spec.history_needed:
        raise InsufficientLags(f"index {i} < history {spec.history_needed}")
    if spec.family == "seasonal_naive":
        raw = series.values[i - spec.season]
    elif spec.family == "moving_average":
        raw = float(np.mean(series.values[i - spec.window:i]))
    else:
        feats = [1.0] + [series.values[i - l] for l in spec.lags]
        if spec.use_exog:
            feats.append(float(series.exog_at(series.ts[i:i + 1])[0]))
        raw = float(np.dot(coefficients, feats))
    return max(float(raw), 0.0)
