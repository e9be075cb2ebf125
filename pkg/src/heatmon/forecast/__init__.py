from .correct import CorrectionDecision, CorrectionPolicy, online_correct, rolling_relative_error
from .fit import (
    FitResult,
    default_grid,
    fit_candidates,
    grid_from_labels,
    predict,
    required_length,
    select_best,
)
from .models import (
    FAMILIES,
    Forecast,
    FittedModel,
    ModelSpec,
    SeriesWindow,
    parse_model_spec,
)

__all__ = [
    "CorrectionDecision",
    "CorrectionPolicy",
    "FAMILIES",
    "FitResult",
    "FittedModel",
    "Forecast",
    "ModelSpec",
    "SeriesWindow",
    "default_grid",
    "fit_candidates",
    "grid_from_labels",
    "online_correct",
    "parse_model_spec",
    "predict",
    "required_length",
    "rolling_relative_error",
    "select_best",
]
