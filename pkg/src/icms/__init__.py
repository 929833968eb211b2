"""City telemetry engines: safety rules, energy forecasting, maintenance.

Three engines behind one HTTP service plus a replay CLI: rule-based traffic
safety monitoring over cadence-aligned windows, a day-type x hour movement
forecaster driving lighting recommendations, and a deduplicating registry of
confidence-scored infrastructure issues. All state derives from an
append-only event log, so restart equals replay.
"""

from .config import Config, load_config, validate_config
from .service import Engine

__version__ = "0.1.0"

__all__ = ["Config", "Engine", "load_config", "validate_config", "__version__"]
