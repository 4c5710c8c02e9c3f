"""Stranded-power classification and temporal statistics.

Two model families decide when a site's offered generation counts as
stranded: an instantaneous one (slot price below a threshold) and a
period-averaged one (power-weighted mean price below the threshold over a
window).  The period rule is operationalized as greedy maximal extension:
an interval opens at a below-threshold slot with positive power, grows
rightward while the running power-weighted mean price stays below the
threshold, and closes at the first slot that would push the mean over (or
at a zero-power/missing slot, which can never belong to an interval).
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedValueError, ValidationError
from .market import SLOT_S, format_utc

LMP_FAMILY = "lmp"
NETPRICE_FAMILY = "netprice"

DEFAULT_BUCKET_EDGES_H = (1.0, 5.0, 10.0, 50.0, 100.0)


@dataclass(frozen=True)
class SpModel:
    """A stranded-power definition: family plus price threshold in $/MWh."""

    family: str
    threshold_c: float

    def __post_init__(self):
        if self.family not in (LMP_FAMILY, NETPRICE_FAMILY):
            raise ValidationError(f"unknown SP model family {self.family!r}")
        if not np.isfinite(self.threshold_c):
            raise ValidationError("threshold must be finite")

    @classmethod
    def lmp(cls, threshold_c):
        return cls(LMP_FAMILY, float(threshold_c))

    @classmethod
    def netprice(cls, threshold_c):
        return cls(NETPRICE_FAMILY, float(threshold_c))

    @property
    def label(self):
        prefix = "lmp" if self.family == LMP_FAMILY else "np"
        return f"{prefix}{self.threshold_c:g}"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class SpInterval:
    """Maximal contiguous stranded window; [start, end) in epoch seconds."""

    site_id: str
    start: int
    end: int
    avg_power: float      # MW averaged over the window
    energy_mwh: float
    net_price: float      # power-weighted mean $/MWh over the window

    def __post_init__(self):
        if self.end <= self.start:
            raise ValidationError("interval end must exceed start")
        if (self.end - self.start) % SLOT_S != 0:
            raise ValidationError("interval duration must be whole slots")

    @property
    def duration_s(self):
        return self.end - self.start

    @property
    def duration_h(self):
        return (self.end - self.start) / 3600.0


@dataclass(frozen=True)
class IntervalHistogram:
    """Interval counts and duty-factor contribution per duration bucket.

    Bucket i spans [edges[i-1], edges[i]) hours with open ends at both
    extremes; `count_fractions` sum to 1 whenever any interval exists and
    `duty_contributions` sum to the overall duty factor.
    """

    bucket_edges_h: tuple
    counts: tuple
    count_fractions: tuple
    duty_contributions: tuple

    def to_dict(self):
        return {
            "bucket_edges_h": list(self.bucket_edges_h),
            "counts": list(self.counts),
            "count_fractions": list(self.count_fractions),
            "duty_contributions": list(self.duty_contributions),
        }


@dataclass(frozen=True)
class SpReport:
    """Per-site stranded-power summary under one model."""

    model: SpModel
    site_id: str
    duty_factor: float
    intervals: tuple
    avg_stranded_mw: float
    total_mwh: float          # annualized
    histogram: IntervalHistogram
    horizon: tuple            # (start, end) epoch seconds

    def validate(self):
        if not (0.0 <= self.duty_factor <= 1.0):
            raise ValidationError("duty factor out of [0, 1]")
        if self.intervals:
            if abs(sum(self.histogram.count_fractions) - 1.0) > 1e-9:
                raise ValidationError("histogram count fractions must sum to 1")
            if abs(sum(self.histogram.duty_contributions) - self.duty_factor) > 1e-9:
                raise ValidationError("histogram duty contributions must sum to the duty factor")

    def to_dict(self):
        return {
            "model": {"family": self.model.family, "threshold_c": self.model.threshold_c},
            "site_id": self.site_id,
            "duty_factor": self.duty_factor,
            "avg_stranded_mw": self.avg_stranded_mw,
            "total_mwh": self.total_mwh,
            "n_intervals": len(self.intervals),
            "intervals": [[format_utc(iv.start), format_utc(iv.end),
                           iv.avg_power, iv.net_price] for iv in self.intervals],
            "histogram": self.histogram.to_dict(),
        }


def net_price(slots):
    """Power-weighted mean price over a contiguous slice of slots."""
    if len(slots) == 0:
        raise ValidationError("net price of an empty slice is undefined")
    total_power = sum(s.power for s in slots)
    if total_power <= 0:
        raise UndefinedValueError("net price undefined: total power is zero")
    return sum(s.lmp * s.power for s in slots) / total_power


def _make_interval(series, i0, i1):
    """Build an SpInterval from slot index range [i0, i1)."""
    lmp = series.lmp[i0:i1]
    power = series.power[i0:i1]
    psum = float(power.sum())
    avg_power = psum / (i1 - i0)
    energy = psum * (SLOT_S / 3600.0)
    np_price = float((lmp * power).sum() / psum)
    return SpInterval(series.site_id,
                      series.epoch + SLOT_S * i0,
                      series.epoch + SLOT_S * i1,
                      avg_power, energy, np_price)


def detect_intervals(series, model):
    """Find maximal disjoint SP intervals for one site under one model."""
    if len(series) == 0:
        raise ValidationError("series is empty")
    c = model.threshold_c
    usable = (~series.missing) & (series.power > 0)

    if model.family == LMP_FAMILY:
        active = usable & (series.lmp < c)
        if not active.any():
            return []
        flat = np.flatnonzero(np.diff(np.concatenate(([False], active, [False])).astype(np.int8)))
        starts, ends = flat[0::2], flat[1::2]
        return [_make_interval(series, int(s), int(e)) for s, e in zip(starts, ends)]

    # NetPrice family: greedy maximal extension of the running weighted mean.
    lmp = series.lmp
    power = series.power
    ok = usable
    n = len(series)
    intervals = []
    i = 0
    while i < n:
        if not (ok[i] and lmp[i] < c):
            i += 1
            continue
        wsum = lmp[i] * power[i]
        psum = power[i]
        j = i + 1
        while j < n and ok[j]:
            w2 = wsum + lmp[j] * power[j]
            p2 = psum + power[j]
            if w2 >= c * p2:       # adding slot j pushes the mean to/over C
                break
            wsum, psum = w2, p2
            j += 1
        intervals.append(_make_interval(series, i, j))
        i = j
    return intervals


def duty_factor(intervals, horizon):
    """Fraction of the horizon covered by (disjoint) intervals."""
    t0, t1 = horizon
    if t1 <= t0:
        raise ValidationError("horizon end must exceed start")
    total = 0
    prev_end = None
    for iv in sorted(intervals, key=lambda v: v.start):
        if iv.start < t0 or iv.end > t1:
            raise ValidationError("interval lies outside the horizon")
        if prev_end is not None and iv.start < prev_end:
            raise ValidationError("intervals overlap")
        prev_end = iv.end
        total += iv.duration_s
    return total / (t1 - t0)


def interval_histogram(intervals, bucket_edges_h=DEFAULT_BUCKET_EDGES_H, horizon=None):
    """Bucket intervals by duration; report count fractions and duty shares."""
    edges = tuple(float(e) for e in bucket_edges_h)
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError("bucket edges must be strictly increasing")
    n_buckets = len(edges) + 1
    counts = [0] * n_buckets
    durations = [0.0] * n_buckets
    for iv in intervals:
        b = int(np.searchsorted(edges, iv.duration_h, side="right"))
        counts[b] += 1
        durations[b] += iv.duration_s
    total = sum(counts)
    fractions = [c / total if total else 0.0 for c in counts]
    if horizon is not None:
        span = horizon[1] - horizon[0]
        contributions = [d / span for d in durations]
    else:
        contributions = [0.0] * n_buckets
    return IntervalHistogram(edges, tuple(counts), tuple(fractions), tuple(contributions))


def build_report(series, model, bucket_edges_h=DEFAULT_BUCKET_EDGES_H):
    """Full per-site SpReport: intervals, duty factor, quantity, histogram."""
    intervals = detect_intervals(series, model)
    horizon = (series.epoch, series.end)
    df = duty_factor(intervals, horizon)
    hist = interval_histogram(intervals, bucket_edges_h, horizon)
    if intervals:
        sp_slots = sum(iv.duration_s // SLOT_S for iv in intervals)
        power_total = sum(iv.avg_power * (iv.duration_s // SLOT_S) for iv in intervals)
        avg_mw = power_total / sp_slots
        energy = sum(iv.energy_mwh for iv in intervals)
    else:
        avg_mw = 0.0
        energy = 0.0
    annualized = energy * (365 * 86400 / series.horizon_s)
    report = SpReport(model, series.site_id, df, tuple(intervals),
                      avg_mw, annualized, hist, horizon)
    report.validate()
    return report


def rank_sites(reports, k):
    """Top-k site ids by duty factor, then annualized energy, then id."""
    if k > len(reports):
        raise ValidationError(f"k={k} exceeds the {len(reports)} available sites")
    ordered = sorted(reports, key=lambda r: (-r.duty_factor, -r.total_mwh, r.site_id))
    return [r.site_id for r in ordered[:k]]


def _aligned_masks(series_set, model):
    """Per-slot SP masks for series sharing one grid; returns (masks, n)."""
    series_list = list(series_set)
    if not series_list:
        raise ValidationError("no series given")
    epoch = series_list[0].epoch
    n = len(series_list[0])
    masks = []
    for s in series_list:
        if s.epoch != epoch or len(s) != n:
            raise ValidationError("series do not share a common horizon grid")
        mask = np.zeros(n, dtype=bool)
        for iv in detect_intervals(s, model):
            i0 = (iv.start - epoch) // SLOT_S
            i1 = (iv.end - epoch) // SLOT_S
            mask[i0:i1] = True
        masks.append(mask)
    return series_list, masks, n


def cumulative_duty_factor(series_set, model):
    """Fraction of slots where at least one of the sites is stranded."""
    _, masks, n = _aligned_masks(series_set, model)
    union = np.zeros(n, dtype=bool)
    for m in masks:
        union |= m
    return float(union.sum()) / n


def avg_stranded_power(series_set, model):
    """Mean summed stranded MW across sites, over slots where any site is SP."""
    series_list, masks, n = _aligned_masks(series_set, model)
    union = np.zeros(n, dtype=bool)
    total = np.zeros(n)
    for s, m in zip(series_list, masks):
        union |= m
        total[m] += s.power[m]
    active = int(union.sum())
    if active == 0:
        raise UndefinedValueError("no stranded slots: average power undefined")
    return float(total[union].sum()) / active


def bridge_cost_usd(gap_h, load_mw, battery_price_per_kwh):
    """Storage cost to ride through a gap: energy (kWh) times unit price."""
    return gap_h * load_mw * 1000.0 * battery_price_per_kwh


def storage_to_bridge(series, model, load_mw, battery_price_per_kwh):
    """Longest SP-free run and the storage cost to bridge it at `load_mw`."""
    if load_mw <= 0:
        raise ValidationError("load must be positive")
    if battery_price_per_kwh <= 0:
        raise ValidationError("battery price must be positive")
    intervals = detect_intervals(series, model)
    gaps = []
    cursor = series.epoch
    for iv in intervals:
        gaps.append(iv.start - cursor)
        cursor = iv.end
    gaps.append(series.end - cursor)
    longest_s = max(gaps) if gaps else series.horizon_s
    longest_h = longest_s / 3600.0
    return {
        "longest_gap_h": longest_h,
        "bridge_cost_usd": bridge_cost_usd(longest_h, load_mw, battery_price_per_kwh),
    }


def report_to_json(report, path=None):
    """Serialize an SpReport; returns the JSON text."""
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
