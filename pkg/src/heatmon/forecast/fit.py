"""Candidate fitting, holdout scoring and best-model selection.

The last ``holdout_steps`` points (default: 14 days at the series grain)
are withheld; every candidate is fit on the remainder, asked for a
multi-step forecast over the holdout and scored by mean absolute error
over quality-good holdout points. Selection is argmin MAE; exact ties
prefer fewer coefficients, then earlier family declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDesign, EmptyCandidates, MissingExogenous, SeriesTooShort
from .models import (
    FAMILIES,
    Forecast,
    FittedModel,
    GOOD,
    ModelSpec,
    SeriesWindow,
    fit_coefficients,
    forecast_values,
    parse_model_spec,
)

HOLDOUT_DAYS = 14


def default_grid():
    return [
        ModelSpec("seasonal_naive", season=24),
        ModelSpec("moving_average", window=3),
        ModelSpec("moving_average", window=24),
        ModelSpec("linear_exog", lags=(1, 2, 24, 168)),
        ModelSpec("linear_exog", lags=(1, 2, 24, 168), use_exog=True),
    ]


def grid_from_labels(labels):
    return [parse_model_spec(text) for text in labels]


def required_length(grid, holdout_steps: int) -> int:
    return max(2 * spec.history_needed for spec in grid) + holdout_steps


@dataclass
class FitResult:
    models: list
    skipped: list = field(default_factory=list)   # (ModelSpec, reason)


def fit_candidates(series: SeriesWindow, grid=None, holdout_steps: int = None,
                   store_version: int = 0) -> FitResult:
    grid = list(grid or default_grid())
    if holdout_steps is None:
        holdout_steps = HOLDOUT_DAYS * 86400 // series.grain_seconds
    need = required_length(grid, holdout_steps)
    if len(series) < need:
        raise SeriesTooShort(
            f"({series.object_id}, {series.metric}): {len(series)} points < required {need}")
    n_train = len(series) - holdout_steps
    train = series.head(n_train)
    holdout_actual = series.values[n_train:]
    holdout_scorable = series.quality[n_train:] == GOOD
    if not holdout_scorable.any():
        raise SeriesTooShort(
            f"({series.object_id}, {series.metric}): holdout has no scorable points")
    result = FitResult([])
    for spec in grid:
        try:
            coefficients = fit_coefficients(spec, train)
            predicted = forecast_values(spec, coefficients, train, holdout_steps)
        except (DegenerateDesign, MissingExogenous) as exc:
            result.skipped.append((spec, str(exc)))
            continue
        mae = float(np.mean(np.abs(predicted[holdout_scorable] - holdout_actual[holdout_scorable])))
        result.models.append(FittedModel(
            spec, coefficients,
            (int(train.ts[0]), int(train.ts[-1]) + series.grain_seconds),
            mae, store_version, int(series.ts[-1])))
    return result


def select_best(models) -> FittedModel:
    """Argmin holdout MAE; deterministic tie-breaks, pure in its input."""
    models = list(models)
    if not models:
        raise EmptyCandidates("no fitted candidates to select from")
    return min(models, key=lambda m: (m.holdout_mae, m.n_coefficients,
                                      FAMILIES.index(m.spec.family)))


def predict(model: FittedModel, series: SeriesWindow, horizon: int) -> Forecast:
    """Multi-step forecast continuing the series; points are never negative."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    values = forecast_values(model.spec, model.coefficients, series, horizon)
    step = series.grain_seconds
    start = int(series.ts[-1])
    points = [(start + step * (h + 1), float(v)) for h, v in enumerate(values)]
    return Forecast(model, horizon, points)
