"""Uptime schedules for intermittent compute pools.

A schedule is an ordered set of disjoint closed-open [start, end) intervals
within a horizon.  Schedules come either from a fixed daily cycle or from
stranded-power intervals measured on a market series.
"""

import json

import numpy as np

from .errors import ValidationError


class AvailabilitySchedule:
    """Disjoint, ordered up-intervals over [0, horizon); immutable."""

    def __init__(self, horizon_s, up_intervals):
        self.horizon_s = int(horizon_s)
        ivs = sorted((int(s), int(e)) for s, e in up_intervals)
        merged = []
        for s, e in ivs:
            if e <= s:
                raise ValidationError("up-interval end must exceed start")
            if s < 0 or e > self.horizon_s:
                raise ValidationError("up-interval outside horizon")
            if merged and s < merged[-1][1]:
                raise ValidationError("up-intervals overlap")
            if merged and s == merged[-1][1]:
                merged[-1] = (merged[-1][0], e)
            else:
                merged.append((s, e))
        self.up_intervals = tuple(merged)
        self._starts = np.array([s for s, _ in merged], dtype=np.int64)
        self._ends = np.array([e for _, e in merged], dtype=np.int64)

    @property
    def duty_factor(self):
        if self.horizon_s == 0:
            return 0.0
        return float((self._ends - self._starts).sum()) / self.horizon_s

    def remaining_uptime(self, t):
        """Seconds until the current up-interval ends; 0 when down."""
        if not (0 <= t <= self.horizon_s):
            raise ValidationError("query time outside horizon")
        i = int(np.searchsorted(self._starts, t, side="right")) - 1
        if i >= 0 and t < self._ends[i]:
            return float(self._ends[i] - t)
        return 0.0

    def is_up(self, t):
        return self.remaining_uptime(t) > 0

    def to_dict(self):
        return {"horizon_s": self.horizon_s,
                "up_intervals": [list(iv) for iv in self.up_intervals]}

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d):
        return cls(d["horizon_s"], d["up_intervals"])

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __eq__(self, other):
        if not isinstance(other, AvailabilitySchedule):
            return NotImplemented
        return self.horizon_s == other.horizon_s and self.up_intervals == other.up_intervals

    def __repr__(self):
        return (f"AvailabilitySchedule(horizon_s={self.horizon_s}, "
                f"n_up={len(self.up_intervals)}, duty_factor={self.duty_factor:.3f})")


def periodic_schedule(duty_factor, horizon_s, period_s=86400, phase_s=0):
    """Fixed daily (or other period) cycle: one up-window per period.

    The window starts `phase_s` into each period and lasts
    duty_factor * period, rounded to the nearest second.
    """
    if not (0.0 <= duty_factor <= 1.0):
        raise ValidationError("duty factor must lie in [0, 1]")
    if period_s <= 0 or horizon_s <= 0:
        raise ValidationError("period and horizon must be positive")
    if not (0 <= phase_s < period_s):
        raise ValidationError("phase must lie within one period")
    window = int(round(duty_factor * period_s))
    if window == 0:
        return AvailabilitySchedule(horizon_s, [])
    ivs = []
    k = 0
    while True:
        s = k * period_s + phase_s
        if s >= horizon_s:
            break
        ivs.append((s, min(s + window, horizon_s)))
        k += 1
    return AvailabilitySchedule(horizon_s, ivs)


def sp_schedule(intervals, horizon_s, origin=None):
    """Schedule whose up-intervals mirror SP intervals exactly.

    `origin` maps interval timestamps to schedule time zero; defaults to the
    earliest interval start (or 0 when there are none).
    """
    if not intervals:
        return AvailabilitySchedule(horizon_s, [])
    if origin is None:
        origin = min(iv.start for iv in intervals)
    ivs = [(iv.start - origin, iv.end - origin) for iv in intervals]
    ivs = [(max(s, 0), min(e, horizon_s)) for s, e in ivs if e > 0 and s < horizon_s]
    return AvailabilitySchedule(horizon_s, ivs)


def schedule_from_series(series, model, horizon_s=None):
    """Convenience: detect SP intervals on a series and build the schedule."""
    from .stranded import detect_intervals

    if horizon_s is None:
        horizon_s = series.horizon_s
    intervals = detect_intervals(series, model)
    return sp_schedule(intervals, horizon_s, origin=series.epoch)
