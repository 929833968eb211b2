"""Energy engine: movement series cleanup, forecasting, and lighting advice."""

from .forecast import (
    EvalReport,
    FeatureVector,
    Forecast,
    ForecastModel,
    engineer_features,
    evaluate,
    fit_model,
    forecast_24h,
)
from .lighting import (
    ActivityBlock,
    BlockBasis,
    DimmingRecommendation,
    RecommendationAction,
    find_zero_blocks,
    in_night_window,
    recommend,
    street_load_watts,
)
from .series import HOUR, MovementSeries, build_street_series, floor_hour, preprocess_series

__all__ = [
    "ActivityBlock",
    "BlockBasis",
    "DimmingRecommendation",
    "EvalReport",
    "FeatureVector",
    "Forecast",
    "ForecastModel",
    "HOUR",
    "MovementSeries",
    "RecommendationAction",
    "build_street_series",
    "engineer_features",
    "evaluate",
    "find_zero_blocks",
    "fit_model",
    "floor_hour",
    "forecast_24h",
    "in_night_window",
    "preprocess_series",
    "recommend",
    "street_load_watts",
]
