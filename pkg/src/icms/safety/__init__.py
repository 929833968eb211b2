"""Safety engine: window features, the rule DSL, and violation analytics."""

from .analytics import (
    FrequencyBand,
    FrequencyLevel,
    HourlyRatio,
    Violation,
    eval_rule,
    evaluate_windows,
    frequency_level,
    hourly_speeding_ratio,
)
from .dsl import (
    FEATURE_IDENTIFIERS,
    MAX_DEPTH,
    And,
    Comparison,
    Expr,
    Not,
    Or,
    ParsedRule,
    Rule,
    eval_expr,
    parse_rule,
    pretty_print,
)
from .windows import (
    WindowFeatures,
    build_window_features,
    compute_window_features,
    grid_epoch,
    window_index,
)

__all__ = [
    "And",
    "Comparison",
    "Expr",
    "FEATURE_IDENTIFIERS",
    "FrequencyBand",
    "FrequencyLevel",
    "HourlyRatio",
    "MAX_DEPTH",
    "Not",
    "Or",
    "ParsedRule",
    "Rule",
    "Violation",
    "WindowFeatures",
    "build_window_features",
    "compute_window_features",
    "eval_expr",
    "eval_rule",
    "evaluate_windows",
    "frequency_level",
    "grid_epoch",
    "hourly_speeding_ratio",
    "parse_rule",
    "pretty_print",
    "window_index",
]
