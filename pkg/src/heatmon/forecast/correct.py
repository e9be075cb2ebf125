"""Online correction: watch actuals against the model's own forecast and
refit when the rolling relative error drifts past the threshold.

The model is evaluated on actuals that arrived after its fit anchor,
against the multi-step forecast it would have issued at that anchor.
When the rolling error over the last ``eval_window`` such steps exceeds
the threshold, candidates are refit on the extended series and the best
one replaces the incumbent; forecasting then restarts from the new
anchor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fit import fit_candidates, select_best
from .models import GOOD, FittedModel, SeriesWindow, forecast_values

log = logging.getLogger("heatmon.forecast")


@dataclass(frozen=True)
class CorrectionPolicy:
    threshold: float = 0.15
    eval_window: int = 24
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.eval_window < 1:
            raise ValueError("eval_window must be >= 1")


@dataclass
class CorrectionDecision:
    action: str                      # "kept" | "refit"
    model: FittedModel
    rolling_error: Optional[float]
    evaluated_steps: int


def rolling_relative_error(model: FittedModel, series: SeriesWindow,
                           policy: CorrectionPolicy):
    """Mean |forecast - actual| / max(actual, eps) over the newest window.

    Only quality-good actuals after the model's fit anchor are scored.
    Returns (error | None, scorable step count).
    """
    anchor = int(np.searchsorted(series.ts, model.fit_series_end, side="right"))
    fresh = len(series) - anchor
    if fresh < 1:
        return None, 0
    base = series.head(anchor)
    predicted = forecast_values(model.spec, model.coefficients, base, fresh)
    actual = series.values[anchor:]
    good = series.quality[anchor:] == GOOD
    start = max(0, fresh - policy.eval_window)
    window_good = good[start:]
    if not window_good.any():
        return None, 0
    p = predicted[start:][window_good]
    a = actual[start:][window_good]
    err = float(np.mean(np.abs(p - a) / np.maximum(a, policy.epsilon)))
    return err, int(window_good.sum())


def online_correct(model: FittedModel, series: SeriesWindow,
                   policy: CorrectionPolicy = CorrectionPolicy(),
                   grid=None, holdout_steps: int = None,
                   store_version: int = 0) -> CorrectionDecision:
    """Keep the model or refit it against the extended series."""
    err, n = rolling_relative_error(model, series, policy)
    if n < 1:
        log.info("correction %s/%s: no scorable fresh actuals, kept",
                 series.object_id, series.metric)
        return CorrectionDecision("kept", model, None, 0)
    if err <= policy.threshold:
        log.info("correction %s/%s: rolling error %.4f <= %.2f over %d steps, kept",
                 series.object_id, series.metric, err, policy.threshold, n)
        return CorrectionDecision("kept", model, err, n)
    refit = select_best(fit_candidates(series, grid, holdout_steps=holdout_steps,
                                       store_version=store_version).models)
    log.info("correction %s/%s: rolling error %.4f > %.2f over %d steps, refit to %s",
             series.object_id, series.metric, err, policy.threshold, n, refit.spec.label())
    return CorrectionDecision("refit", refit, err, n)
