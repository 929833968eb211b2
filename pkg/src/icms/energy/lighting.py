"""Zero-activity block detection and public-lighting dimming recommendations."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

from ..config import Config
from ..core import SmartPost
from .forecast import Forecast
from .series import HOUR, MovementSeries


class BlockBasis(str, Enum):
    OBSERVED = "observed"
    FORECAST = "forecast"


class RecommendationAction(str, Enum):
    DIM_TO = "dim_to"
    HALF_OFF = "half_off"


@dataclass(frozen=True)
class ActivityBlock:
    street_id: str
    start: datetime
    length_hours: int
    basis: BlockBasis

    @property
    def end(self) -> datetime:
        return self.start + self.length_hours * HOUR

    def hours(self) -> tuple[datetime, ...]:
        return tuple(self.start + i * HOUR for i in range(self.length_hours))

    def to_dict(self) -> dict:
        from ..core import format_instant

        return {
            "street_id": self.street_id,
            "start": format_instant(self.start),
            "length_hours": self.length_hours,
            "basis": self.basis.value,
        }


@dataclass(frozen=True)
class DimmingRecommendation:
    street_id: str
    block: ActivityBlock
    action: RecommendationAction
    dim_level: Optional[float]   # set only for dim_to
    estimated_savings_kwh: float

    def to_dict(self) -> dict:
        return {
            "street_id": self.street_id,
            "block": self.block.to_dict(),
            "action": self.action.value,
            "dim_level": self.dim_level,
            "estimated_savings_kwh": self.estimated_savings_kwh,
        }


def in_night_window(hour: int, window: tuple[int, int]) -> bool:
    """Hour-of-day membership in a possibly midnight-crossing [start, end) window."""
    start, end = window
    if start < end:
        return start <= hour < end
    return hour >= start or hour < end


def find_zero_blocks(
    data: Union[MovementSeries, Forecast],
    config: Config,
) -> list[ActivityBlock]:
    """Maximal runs of consecutive night hours with no movement.

    Observed series qualify an hour at count exactly 0; forecasts qualify at
    a predicted count below 0.5. Missing observations, grid gaps, and hours
    outside the night window all break a run. Runs shorter than
    min_block_hours are dropped.
    """
    if isinstance(data, Forecast):
        basis = BlockBasis.FORECAST
        points: Sequence[tuple[datetime, Optional[float]]] = data.points
        qualifies = lambda v: v is not None and v < 0.5  # noqa: E731
    else:
        basis = BlockBasis.OBSERVED
        points = data.points
        qualifies = lambda v: v is not None and v == 0  # noqa: E731

    blocks: list[ActivityBlock] = []
    run_start: Optional[datetime] = None
    run_len = 0
    prev_ts: Optional[datetime] = None

    def flush() -> None:
        nonlocal run_start, run_len
        if run_start is not None and run_len >= config.min_block_hours:
            blocks.append(ActivityBlock(data.street_id, run_start, run_len, basis))
        run_start, run_len = None, 0

    for ts, value in points:
        local_hour = ts.astimezone(config.tz).hour
        ok = in_night_window(local_hour, config.night_window) and qualifies(value)
        contiguous = prev_ts is not None and ts - prev_ts == HOUR
        if ok:
            if run_start is None or not contiguous:
                flush()
                run_start, run_len = ts, 1
            else:
                run_len += 1
        else:
            flush()
        prev_ts = ts
    flush()
    return blocks


def street_load_watts(posts: Iterable[SmartPost]) -> float:
    return sum(p.lamp_count * p.lamp_wattage_w for p in posts)


def recommend(
    blocks: Iterable[ActivityBlock],
    posts: Sequence[SmartPost],
    config: Config,
    dim_level: Optional[float] = None,
) -> list[DimmingRecommendation]:
    """One recommendation per block: dim every lamp when the whole street
    supports it, otherwise switch off half the posts.

    savings_kwh = hours * total_watts * saving_fraction / 1000, with
    saving_fraction = 1 - dim_level when dimming and 0.5 for half_off.
    """
    posts = list(posts)
    if not posts:
        return []
    level = config.dim_level if dim_level is None else dim_level
    if not 0 < level < 1:
        from ..errors import ValidationError

        raise ValidationError("dim_level must be strictly between 0 and 1")
    all_dimmable = all(p.dimmable for p in posts)
    watts = street_load_watts(posts)
    out: list[DimmingRecommendation] = []
    for block in blocks:
        if all_dimmable:
            action, lvl, fraction = RecommendationAction.DIM_TO, level, 1.0 - level
        else:
            action, lvl, fraction = RecommendationAction.HALF_OFF, None, 0.5
        out.append(
            DimmingRecommendation(
                street_id=block.street_id,
                block=block,
                action=action,
                dim_level=lvl,
                estimated_savings_kwh=block.length_hours * watts * fraction / 1000.0,
            )
        )
    return out
