"""Boxplot aggregation of answered ranks across finalized sessions.

Rank convention everywhere: 1 = perceived strongest. Quartiles use the
inclusive linear-interpolation method (the same convention as numpy's
default percentile); whiskers are Tukey style, the most extreme data
points within 1.5 * IQR of the quartiles, and points beyond them are
listed as outliers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .battery import StimulusBattery
from .errors import DomainError, ValidationError
from .session import SessionRecord

WHISKER_REACH = 1.5


def quantile_linear(values: Sequence[float], q: float) -> float:
    """Inclusive linear-interpolation quantile of already-collected values."""
    if not values:
        raise DomainError("cannot take a quantile of no values")
    if not (0.0 <= q <= 1.0):
        raise DomainError(f"quantile must lie in [0, 1], got {q}")
    ordered = sorted(float(v) for v in values)
    pos = q * (len(ordered) - 1)
    lo = int(pos)
    frac = pos - lo
    if frac == 0.0:
        return ordered[lo]
    return ordered[lo] + frac * (ordered[lo + 1] - ordered[lo])


@dataclass(frozen=True)
class StimulusRankStats:
    """Rank distribution of one stimulus with its boxplot statistics."""

    stimulus_id: str
    ranks: tuple[int, ...]  # sorted ascending, one per session
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[int, ...]


@dataclass(frozen=True)
class RankAggregate:
    battery_ids: tuple[str, ...]
    per_stimulus: tuple[StimulusRankStats, ...]
    n_sessions: int

    def get(self, stimulus_id: str) -> StimulusRankStats:
        for row in self.per_stimulus:
            if row.stimulus_id == stimulus_id:
                return row
        raise ValidationError(f"no stimulus {stimulus_id!r} in aggregate")


def _boxplot_stats(stimulus_id: str, ranks: list[int]) -> StimulusRankStats:
    ordered = sorted(ranks)
    q1 = quantile_linear(ordered, 0.25)
    median = quantile_linear(ordered, 0.5)
    q3 = quantile_linear(ordered, 0.75)
    reach = WHISKER_REACH * (q3 - q1)
    inside = [r for r in ordered if q1 - reach <= r <= q3 + reach]
    # q1/q3 are bracketed by data points, so `inside` is never empty
    whisker_low = float(min(inside))
    whisker_high = float(max(inside))
    outliers = tuple(r for r in ordered if r < whisker_low or r > whisker_high)
    return StimulusRankStats(
        stimulus_id=stimulus_id,
        ranks=tuple(ordered),
        median=median,
        q1=q1,
        q3=q3,
        whisker_low=whisker_low,
        whisker_high=whisker_high,
        outliers=outliers,
    )


def aggregate_ranks(
    records: Sequence[SessionRecord],
    battery: StimulusBattery | Sequence[str],
) -> RankAggregate:
    """Collect per-stimulus rank distributions across sessions.

    Every record must reference the same battery (same ids in the same
    order). The result is independent of the order records are passed in.
    """
    battery_ids = tuple(battery.ids if isinstance(battery, StimulusBattery) else battery)
    if not battery_ids:
        raise ValidationError("battery has no stimuli", path="battery")
    if not records:
        raise DomainError("no records to aggregate")
    for rec in records:
        if tuple(rec.battery_ids) != battery_ids:
            raise ValidationError(
                f"record {rec.session_id} references battery {list(rec.battery_ids)}, "
                f"expected {list(battery_ids)}",
                path="battery",
            )
    per_index: list[list[int]] = [[] for _ in battery_ids]
    for rec in records:
        for position, battery_index in enumerate(rec.ranking):
            per_index[battery_index].append(position + 1)  # rank 1 = strongest
    rows = tuple(
        _boxplot_stats(battery_ids[i], ranks) for i, ranks in enumerate(per_index)
    )
    return RankAggregate(battery_ids=battery_ids, per_stimulus=rows, n_sessions=len(records))
