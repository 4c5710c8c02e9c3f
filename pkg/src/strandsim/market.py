"""Power-market time series at 5-minute resolution.

Ingests per-site price/generation records, exports them in the same CSV
format, and synthesizes calibrated series for experiments where real market
feeds are unavailable.  All analytics downstream operate on `SiteSeries`.

Time convention: slot timestamps are UTC epoch seconds, always an exact
multiple of 300 s from the series epoch.  Gaps are kept as explicit missing
slots and are treated as non-stranded time by every consumer.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError, CalibrationError, ParseError, ValidationError

SLOT_S = 300
SLOTS_PER_HOUR = 3600 // SLOT_S
SLOTS_PER_DAY = 86400 // SLOT_S

CSV_HEADER = ["site_id", "timestamp_utc", "lmp_usd_per_mwh", "power_mw"]

# 2014-01-01T00:00:00Z; default epoch for synthesized series.
DEFAULT_EPOCH = 1388534400


def snap_to_slot(t):
    """Floor an epoch timestamp to the 5-minute grid."""
    return int(t) - int(t) % SLOT_S


def parse_utc(text):
    """Parse an ISO-8601 timestamp (naive treated as UTC) to epoch seconds."""
    raw = text.strip().replace("Z", "+00:00")
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_utc(t):
    return datetime.fromtimestamp(int(t), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class MarketSlot:
    """One 5-minute market observation for a site."""

    site_id: str
    t: int                # epoch seconds, multiple of SLOT_S
    lmp: float            # $/MWh, may be negative
    power: float          # offered generation, MW
    missing: bool = False

    def validate(self):
        if self.t % SLOT_S != 0:
            raise ValidationError(f"timestamp {self.t} is not on the {SLOT_S}s grid")
        if not self.missing:
            if not math.isfinite(self.lmp):
                raise ValidationError(f"non-finite lmp at t={self.t}")
            if not (self.power >= 0):
                raise ValidationError(f"negative power at t={self.t}")


class SiteSeries:
    """Uniform 5-minute series of (lmp, power) for one generation site.

    Backed by numpy arrays; `missing` marks grid slots with no observation.
    """

    def __init__(self, site_id, epoch, lmp, power, missing=None):
        self.site_id = str(site_id)
        self.epoch = int(epoch)
        self.lmp = np.asarray(lmp, dtype=np.float64)
        self.power = np.asarray(power, dtype=np.float64)
        if missing is None:
            missing = np.zeros(len(self.lmp), dtype=bool)
        self.missing = np.asarray(missing, dtype=bool)
        self.validate()

    def validate(self):
        if self.epoch % SLOT_S != 0:
            raise ValidationError("series epoch is not on the 5-minute grid")
        n = len(self.lmp)
        if len(self.power) != n or len(self.missing) != n:
            raise ValidationError("series arrays have mismatched lengths")
        present = ~self.missing
        if np.any(~np.isfinite(self.lmp[present])):
            raise ValidationError(f"site {self.site_id}: non-finite lmp")
        if np.any(self.power[present] < 0):
            raise ValidationError(f"site {self.site_id}: negative power")

    def __len__(self):
        return len(self.lmp)

    @property
    def horizon_s(self):
        return len(self) * SLOT_S

    @property
    def end(self):
        return self.epoch + self.horizon_s

    @property
    def timestamps(self):
        return self.epoch + SLOT_S * np.arange(len(self), dtype=np.int64)

    def slot(self, i):
        return MarketSlot(self.site_id, self.epoch + SLOT_S * int(i),
                          float(self.lmp[i]), float(self.power[i]), bool(self.missing[i]))

    def slots(self):
        for i in range(len(self)):
            yield self.slot(i)

    def __eq__(self, other):
        if not isinstance(other, SiteSeries):
            return NotImplemented
        return (self.site_id == other.site_id
                and self.epoch == other.epoch
                and len(self) == len(other)
                and bool(np.array_equal(self.missing, other.missing))
                and bool(np.array_equal(self.lmp[~self.missing], other.lmp[~other.missing]))
                and bool(np.array_equal(self.power[~self.missing], other.power[~other.missing])))

    def __repr__(self):
        return (f"SiteSeries(site_id={self.site_id!r}, epoch={self.epoch}, "
                f"slots={len(self)}, missing={int(self.missing.sum())})")


@dataclass(frozen=True)
class Distribution:
    """Small parametric distribution spec used by synthetic generators.

    kinds: constant(value) | uniform(low, high) | normal(mean, std)
           | lognormal(mean, std)  (moments of the variate, not of log)
           | exponential(mean)
    Optional clip bounds apply after sampling.
    """

    kind: str
    params: tuple
    clip: tuple | None = None

    def validate(self):
        p = self.params
        if self.kind == "constant":
            ok = len(p) == 1 and math.isfinite(p[0])
        elif self.kind == "uniform":
            ok = len(p) == 2 and p[0] <= p[1]
        elif self.kind == "normal":
            ok = len(p) == 2 and p[1] >= 0
        elif self.kind == "lognormal":
            ok = len(p) == 2 and p[0] > 0 and p[1] >= 0
        elif self.kind == "exponential":
            ok = len(p) == 1 and p[0] > 0
        else:
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if not ok:
            raise ConfigError(f"degenerate parameters for {self.kind}: {p}")

    @property
    def mean(self):
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        # normal / lognormal / exponential all carry the mean first
        return self.params[0]

    def sample(self, rng, n):
        self.validate()
        if self.kind == "constant":
            out = np.full(n, float(self.params[0]))
        elif self.kind == "uniform":
            out = rng.uniform(self.params[0], self.params[1], n)
        elif self.kind == "normal":
            out = rng.normal(self.params[0], self.params[1], n)
        elif self.kind == "lognormal":
            mu, sigma = lognormal_from_moments(self.params[0], self.params[1])
            out = rng.lognormal(mu, sigma, n)
        else:  # exponential
            out = rng.exponential(self.params[0], n)
        if self.clip is not None:
            out = np.clip(out, self.clip[0], self.clip[1])
        return out

    def to_dict(self):
        d = {"kind": self.kind, "params": list(self.params)}
        if self.clip is not None:
            d["clip"] = list(self.clip)
        return d

    @classmethod
    def from_dict(cls, d):
        clip = tuple(d["clip"]) if d.get("clip") is not None else None
        return cls(kind=d["kind"], params=tuple(d["params"]), clip=clip)


def lognormal_from_moments(mean, std):
    """Return (mu, sigma) of the log so the variate has the given moments."""
    if mean <= 0:
        raise ConfigError("lognormal mean must be positive")
    cv2 = (std / mean) ** 2
    sigma2 = math.log1p(cv2)
    mu = math.log(mean) - 0.5 * sigma2
    return mu, math.sqrt(sigma2)


@dataclass(frozen=True)
class SynthMarketConfig:
    """Two-state renewal process generating a synthetic market series.

    The series alternates between normal pricing and negative-price episodes.
    Episode onset is a Poisson-like renewal with `negative_price_episode_rate`
    episodes/day on average; durations come from
    `episode_duration_distribution` (hours).  A rate of zero produces a series
    with no episodes at all.
    """

    horizon_s: int = 365 * 86400
    mean_power: float = 100.0
    negative_price_episode_rate: float = 2.0      # episodes/day
    episode_duration_distribution: Distribution = field(
        default_factory=lambda: Distribution("lognormal", (2.0, 2.0), clip=(1 / 12, 120.0)))
    price_level_during_episode: Distribution = field(
        default_factory=lambda: Distribution("uniform", (-12.0, 2.0)))
    base_price: Distribution = field(
        default_factory=lambda: Distribution("uniform", (5.0, 45.0)))
    seed: int = 0
    site_id: str = "synth-0"
    epoch: int = DEFAULT_EPOCH
    power_volatility: float = 0.4                 # cv of the slot power process

    def validate(self):
        if self.horizon_s < 86400:
            raise ConfigError("horizon must cover at least one day")
        if self.horizon_s % SLOT_S != 0:
            raise ConfigError("horizon must be a multiple of the slot length")
        if self.mean_power <= 0:
            raise ConfigError("mean_power must be positive")
        if self.negative_price_episode_rate < 0:
            raise ConfigError("episode rate must be non-negative")
        for dist in (self.episode_duration_distribution,
                     self.price_level_during_episode, self.base_price):
            dist.validate()
        if self.episode_duration_distribution.mean <= 0:
            raise ConfigError("episode duration mean must be positive")
        rate = self.negative_price_episode_rate
        if rate > 0 and rate * self.episode_duration_distribution.mean >= 24.0:
            raise ConfigError("episodes would cover more than the full day; "
                              "reduce rate or duration")

    def to_dict(self):
        return {
            "horizon_s": self.horizon_s,
            "mean_power": self.mean_power,
            "negative_price_episode_rate": self.negative_price_episode_rate,
            "episode_duration_distribution": self.episode_duration_distribution.to_dict(),
            "price_level_during_episode": self.price_level_during_episode.to_dict(),
            "base_price": self.base_price.to_dict(),
            "seed": self.seed,
            "site_id": self.site_id,
            "epoch": self.epoch,
            "power_volatility": self.power_volatility,
        }

    @classmethod
    def from_dict(cls, d):
        kwargs = dict(d)
        for key in ("episode_duration_distribution", "price_level_during_episode", "base_price"):
            if key in kwargs:
                kwargs[key] = Distribution.from_dict(kwargs[key])
        return cls(**kwargs)


def ingest_csv(path, schema=None):
    """Read a market CSV into one SiteSeries per site.

    The expected header is ``site_id,timestamp_utc,lmp_usd_per_mwh,power_mw``;
    `schema` may remap canonical names to actual column names.  Rows are
    snapped to the 5-minute grid (last observation within a slot wins); grid
    slots with no observation between a site's first and last timestamps are
    marked missing.  Exact duplicate (site, timestamp) rows are rejected.

    Returns a dict keyed by site_id, sorted by key.
    """
    colmap = dict(zip(CSV_HEADER, CSV_HEADER))
    if schema:
        colmap.update(schema)

    per_site = {}      # site -> {slot_t: (raw_t, lmp, power)}
    seen_raw = set()
    n_rows = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty input")
        for name in colmap.values():
            if name not in reader.fieldnames:
                raise ParseError(f"missing column {name!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            n_rows += 1
            try:
                site = row[colmap["site_id"]].strip()
                raw_t = parse_utc(row[colmap["timestamp_utc"]])
                lmp = float(row[colmap["lmp_usd_per_mwh"]])
                power = float(row[colmap["power_mw"]])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed row ({exc})", line=lineno) from exc
            if not site:
                raise ParseError("empty site_id", line=lineno)
            if not math.isfinite(lmp):
                raise ParseError("non-finite lmp", line=lineno)
            if power < 0:
                raise ParseError("negative power", line=lineno)
            key = (site, raw_t)
            if key in seen_raw:
                raise ValidationError(
                    f"duplicate slot for site {site!r} at {format_utc(raw_t)}")
            seen_raw.add(key)
            slot_t = snap_to_slot(raw_t)
            bucket = per_site.setdefault(site, {})
            prev = bucket.get(slot_t)
            # Last observation within the slot carries forward.
            if prev is None or raw_t >= prev[0]:
                bucket[slot_t] = (raw_t, lmp, power)

    if n_rows == 0:
        raise ValidationError(f"{path}: empty input")

    out = {}
    for site in sorted(per_site):
        bucket = per_site[site]
        t0, t1 = min(bucket), max(bucket)
        n = (t1 - t0) // SLOT_S + 1
        lmp = np.zeros(n)
        power = np.zeros(n)
        missing = np.ones(n, dtype=bool)
        for slot_t, (_, l, p) in bucket.items():
            i = (slot_t - t0) // SLOT_S
            lmp[i], power[i], missing[i] = l, p, False
        out[site] = SiteSeries(site, t0, lmp, power, missing)
    return out


def export_csv(series_map, path):
    """Write series to the ingest CSV format (missing slots are omitted)."""
    if isinstance(series_map, SiteSeries):
        series_map = {series_map.site_id: series_map}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for site in sorted(series_map):
            s = series_map[site]
            ts = s.timestamps
            for i in np.flatnonzero(~s.missing):
                writer.writerow([s.site_id, format_utc(ts[i]),
                                 repr(float(s.lmp[i])), repr(float(s.power[i]))])


def synthesize_market(config):
    """Generate a SiteSeries from a SynthMarketConfig; deterministic per seed."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.horizon_s // SLOT_S

    episode = np.zeros(n, dtype=bool)
    rate = config.negative_price_episode_rate
    if rate > 0:
        ep_mean_h = config.episode_duration_distribution.mean
        normal_mean_h = 24.0 / rate - ep_mean_h
        pos = 0
        # Start mid-cycle so the series does not always open with an episode.
        pos += int(round(rng.exponential(normal_mean_h) * SLOTS_PER_HOUR))
        while pos < n:
            dur_h = float(config.episode_duration_distribution.sample(rng, 1)[0])
            dur = max(1, int(round(dur_h * SLOTS_PER_HOUR)))
            episode[pos:pos + dur] = True
            pos += dur
            gap_h = rng.exponential(normal_mean_h)
            pos += max(1, int(round(gap_h * SLOTS_PER_HOUR)))

    lmp = np.empty(n)
    n_ep = int(episode.sum())
    lmp[~episode] = config.base_price.sample(rng, n - n_ep)
    if n_ep:
        lmp[episode] = config.price_level_during_episode.sample(rng, n_ep)

    # AR(1) log-power around mean_power; strictly positive everywhere.
    cv = config.power_volatility
    sigma2 = math.log1p(cv * cv)
    phi = 0.97
    innov_sd = math.sqrt(sigma2 * (1 - phi * phi))
    x = np.empty(n)
    x[0] = rng.normal(0.0, math.sqrt(sigma2))
    eps = rng.normal(0.0, innov_sd, n - 1)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + eps[i - 1]
    power = config.mean_power * np.exp(x - 0.5 * sigma2)

    return SiteSeries(config.site_id, config.epoch, lmp, power)


def measure_duty_factor(config, model):
    """Duty factor of the synthesized series under an SP model."""
    from .stranded import detect_intervals, duty_factor

    series = synthesize_market(config)
    intervals = detect_intervals(series, model)
    return duty_factor(intervals, (series.epoch, series.end))


def calibrate_to_duty_factor(target_df, model, base_config, tol=0.015, max_iter=24):
    """Search episode rate/duration so the series measures `target_df`.

    Scales the base config's episode coverage (rate x mean duration) with a
    bounded multiplicative search.  Returns a config whose synthesized series
    measures within +-`tol` of the target under `model`; raises
    CalibrationError with the best-achieved value otherwise.
    """
    if not (0 < target_df < 1):
        raise ValidationError("target duty factor must lie strictly in (0, 1)")
    base_config.validate()

    ep_mean_h = base_config.episode_duration_distribution.mean
    max_coverage = 0.95          # the grid always keeps some SP-free time
    max_rate = max_coverage * 24.0 / ep_mean_h

    def config_at(rate):
        return replace(base_config, negative_price_episode_rate=rate)

    # Initial guess: coverage equal to the target.
    rate = min(max_rate, target_df * 24.0 / ep_mean_h)
    best = (math.inf, None, None)
    lo, lo_df, hi, hi_df = 0.0, 0.0, None, None
    for _ in range(max_iter):
        cfg = config_at(rate)
        df = measure_duty_factor(cfg, model)
        err = abs(df - target_df)
        if err < best[0]:
            best = (err, cfg, df)
        if err <= tol:
            return cfg
        if df < target_df:
            lo, lo_df = rate, df
            if hi is None:
                rate = min(max_rate, rate * min(3.0, target_df / max(df, 1e-6)))
                if rate == lo:   # pinned at the cap and still short
                    break
                continue
        else:
            hi, hi_df = rate, df
        # Secant step inside the bracket, falling back to bisection.
        if hi_df is not None and hi_df > lo_df:
            frac = (target_df - lo_df) / (hi_df - lo_df)
            rate = lo + frac * (hi - lo)
        else:
            rate = 0.5 * (lo + hi)
        rate = min(max(rate, 1e-4), max_rate)

    raise CalibrationError(
        f"could not reach duty factor {target_df} under {model}",
        best_achieved=best[2], best_config=best[1])
