"""Cost-performance study space and extreme-scale projections.

`run_sweep` drives the full cross of system size, power price, compute
hardware price, power density and availability model, combining simulated
throughput with the cost model into throughput-per-$M cells.  Throughput
depends only on (size, density, availability), so simulations are cached and
shared across the price axes.

The extreme-scale helpers project performance/power for future top systems
(compute grows ~20x and power ~3x per five-year generation, with the power
trajectory following the published projection) and evaluate both scale-up
approaches at tens-to-hundreds of MW.
"""

import csv
import os
from dataclasses import dataclass

from .availability import periodic_schedule, schedule_from_series
from .errors import InfeasibleError, StrandsimError, ValidationError
from .market import Distribution, SynthMarketConfig, synthesize_market, calibrate_to_duty_factor
from .simulator import SystemConfig, simulate
from .stranded import LMP_FAMILY, NETPRICE_FAMILY, SpModel
from .tco import (CostParams, amortize, baseline_capital_inputs, cost_performance,
                  power_cost_musd, tco_mixed, tco_traditional)
from .workload import scale_job_size, scale_workload

WORKERS_ENV = "STRANDSIM_WORKERS"

# Duty factors the reference market measured under each stranded-power model.
REFERENCE_DUTY_FACTORS = {"lmp0": 0.21, "lmp5": 0.24, "np0": 0.60, "np5": 0.80}

MODEL_DOE = "doe"
MODEL_HORST_SIMON = "horst-simon"

# Projected top-system generations: (year, peak PFLOPS, MW).  Compute grows
# 20x per five-year step; power roughly triples, tapering at the last step.
DOE_GENERATIONS = (
    (2012, 10.0, 4.0),
    (2017, 200.0, 13.0),
    (2022, 4000.0, 39.0),
    (2027, 80000.0, 116.0),
    (2032, 1600000.0, 232.0),
)

# Empirical efficiency model: GF/kW starts at 2.2K in 2012 and gains 2K per
# five-year step.
HS_BASE_GFKW = 2200.0
HS_STEP_GFKW = 2000.0
HS_BASE_YEAR = 2012


def parse_model_label(label):
    """Parse labels like 'np5' or 'lmp0' into an SpModel."""
    text = label.strip().lower()
    for prefix, family in (("lmp", LMP_FAMILY), ("np", NETPRICE_FAMILY),
                           ("netprice", NETPRICE_FAMILY)):
        if text.startswith(prefix):
            try:
                return SpModel(family, float(text[len(prefix):]))
            except ValueError:
                break
    raise ValidationError(f"cannot parse SP model label {label!r}")


def reference_market_config(model, horizon_s, seed=0):
    """Synthetic market base config with interval texture suited to a model.

    Instantaneous-threshold analyses see short, frequent negative-price
    episodes; period-averaged analyses see long, sustained ones.
    """
    if model.family == LMP_FAMILY:
        duration = Distribution("lognormal", (0.75, 0.9), clip=(1 / 12, 24.0))
        rate = 4.0
    else:
        duration = Distribution("lognormal", (12.0, 14.0), clip=(0.5, 200.0))
        rate = 1.0
    return SynthMarketConfig(
        horizon_s=horizon_s, seed=seed,
        negative_price_episode_rate=rate,
        episode_duration_distribution=duration,
        site_id=f"synth-{model.label}")


def calibrated_market_series(model, target_df, horizon_s, seed=0):
    """Calibrate a synthetic market to `target_df` under `model`."""
    base = reference_market_config(model, horizon_s, seed=seed)
    cfg = calibrate_to_duty_factor(target_df, model, base)
    return cfg, synthesize_market(cfg)


@dataclass(frozen=True)
class GenerationPoint:
    """One projected top-system generation."""

    year: int
    peak_pf: float
    mw: float
    model: str = MODEL_DOE

    def __post_init__(self):
        if self.peak_pf <= 0 or self.mw <= 0:
            raise ValidationError("peak_pf and mw must be positive")

    @property
    def pf_per_mw(self):
        return self.peak_pf / self.mw


def default_anchors():
    return [GenerationPoint(y, pf, mw, MODEL_DOE) for y, pf, mw in DOE_GENERATIONS[:2]]


def project_generations(horizon_year, base=None):
    """Project generations through `horizon_year` for both growth models.

    With the default anchors the projected power follows the published
    trajectory; custom anchors extrapolate geometrically (20x compute, 3x
    power per step).  Returns GenerationPoints sorted by (year, model).
    """
    anchors = base if base is not None else default_anchors()
    if len(anchors) != 2:
        raise ValidationError("exactly two anchor generations are required")
    a0, a1 = sorted(anchors, key=lambda g: g.year)
    if horizon_year < a0.year:
        raise ValidationError("horizon predates the anchor generations")
    step = a1.year - a0.year
    if step <= 0:
        raise ValidationError("anchor years must differ")

    is_default = [(g.year, g.peak_pf, g.mw) for g in (a0, a1)] == \
        [(y, pf, mw) for y, pf, mw in DOE_GENERATIONS[:2]]

    points = []
    if is_default:
        for year, pf, mw in DOE_GENERATIONS:
            if year > horizon_year:
                break
            points.append(GenerationPoint(year, pf, mw, MODEL_DOE))
        last = DOE_GENERATIONS[-1][0]
        if horizon_year >= last + 5:
            raise ValidationError(f"no projection beyond {last}")
    else:
        points.extend([a0, a1])
        year, pf, mw = a1.year, a1.peak_pf, a1.mw
        while year + step <= horizon_year:
            year += step
            pf *= 20.0
            mw *= 3.0
            points.append(GenerationPoint(year, pf, mw, MODEL_DOE))

    hs_points = []
    for p in points:
        steps = (p.year - HS_BASE_YEAR) / 5.0
        gfkw = HS_BASE_GFKW + HS_STEP_GFKW * steps
        if gfkw <= 0:
            continue      # the efficiency model is anchored at HS_BASE_YEAR
        mw = p.peak_pf * 1e6 / gfkw / 1e3
        hs_points.append(GenerationPoint(p.year, p.peak_pf, mw, MODEL_HORST_SIMON))
    return sorted(points + hs_points, key=lambda g: (g.year, g.model))


def _unit_cost_traditional(params):
    return params.c_compute + (params.c_dcf + params.c_power) * params.density


def _unit_cost_stranded(params):
    return params.c_z_compute + (params.c_ctnr + params.c_cool) * params.density


def extreme_tco(mw, approach, params=None):
    """Annual $M at extreme scale, constant cost per MW.

    Traditional installs mw/4 datacenter units.  The stranded approach keeps
    a 4 MW datacenter base and adds (mw-4)/4 stranded-power units on a second
    site with its own backbone link.
    """
    params = params if params is not None else CostParams()
    params.validate()
    if mw < params.unit_mw:
        raise ValidationError(f"extreme scale starts at {params.unit_mw} MW")
    units = mw / params.unit_mw
    if approach == "traditional":
        return units * _unit_cost_traditional(params) + params.c_net
    if approach == "stranded":
        base = _unit_cost_traditional(params) + params.c_net
        z_units = (mw - params.unit_mw) / params.unit_mw
        return base + z_units * _unit_cost_stranded(params) + params.c_net
    raise ValidationError(f"unknown approach {approach!r}")


@dataclass(frozen=True)
class BudgetPoint:
    mw: float
    peak_pflops: float


def peak_pflops_per_budget(budget, approach, generation, params=None, include_base=True):
    """Largest system affordable at `budget` $M/year, in peak PFLOPS.

    Inverts extreme_tco for MW, then applies the generation's PF/MW.  For the
    stranded approach, `include_base=False` prices a pure stranded farm with
    no datacenter base.
    """
    params = params if params is not None else CostParams()
    params.validate()
    if budget <= params.c_net:
        raise InfeasibleError("budget does not even cover the backbone link")
    if approach == "traditional":
        mw = params.unit_mw * (budget - params.c_net) / _unit_cost_traditional(params)
        if mw < params.unit_mw:
            raise InfeasibleError("budget below the minimum feasible system")
    elif approach == "stranded":
        z_unit = _unit_cost_stranded(params)
        if include_base:
            base_total = _unit_cost_traditional(params) + params.c_net
            rest = budget - base_total - params.c_net
            if rest < 0:
                raise InfeasibleError("budget below the 4 MW base system")
            mw = params.unit_mw + params.unit_mw * rest / z_unit
        else:
            mw = params.unit_mw * (budget - params.c_net) / z_unit
    else:
        raise ValidationError(f"unknown approach {approach!r}")
    return BudgetPoint(mw=mw, peak_pflops=mw * generation.pf_per_mw)


def extreme_throughput_cost_eff(mw, approach, duty_factor=0.8, params=None,
                                include_base=True):
    """Effective MWh deliverable per $M of annual cost at extreme scale.

    The stranded portion runs at `duty_factor`; always-on capacity at 1.0.
    """
    params = params if params is not None else CostParams()
    if not (0.0 <= duty_factor <= 1.0):
        raise ValidationError("duty factor must lie in [0, 1]")
    hours = 8760.0
    if approach == "traditional":
        return mw * hours / extreme_tco(mw, approach, params)
    if approach != "stranded":
        raise ValidationError(f"unknown approach {approach!r}")
    if include_base:
        effective_mw = (mw - params.unit_mw) * duty_factor + params.unit_mw
        return effective_mw * hours / extreme_tco(mw, "stranded", params)
    z_unit = _unit_cost_stranded(params)
    tco = (mw / params.unit_mw) * z_unit + params.c_net
    return mw * duty_factor * hours / tco


# -- study space ------------------------------------------------------------

def compute_axis_cost(factor):
    """Published per-unit compute cost at a hardware price factor ($M, 0.1
    granularity of the exact amortized baseline)."""
    exact = amortize(baseline_capital_inputs()["compute"])
    return round(exact * factor, 1)


def power_axis_cost(price):
    """Published per-unit power cost at a $/MWh price ($M, 0.1 granularity)."""
    return round(power_cost_musd(price), 1)


@dataclass(frozen=True)
class StudySpace:
    """Axes of the cost-performance study."""

    n_units: tuple = (1, 2, 4)
    compute_price_factors: tuple = (0.25, 0.5, 1.0, 1.25, 1.5)
    power_prices: tuple = (30.0, 60.0, 120.0, 240.0, 360.0)
    densities: tuple = (1.0, 2.0, 3.0, 4.0, 5.0)
    sp_models: tuple = ("np0", "np5")
    periodic_duty_factors: tuple = ()
    seed: int = 0

    def validate(self):
        for name in ("n_units", "compute_price_factors", "power_prices", "densities"):
            axis = getattr(self, name)
            if not axis:
                raise ValidationError(f"axis {name} is empty")
            if any(v <= 0 for v in axis):
                raise ValidationError(f"axis {name} must be positive")
        if not (self.sp_models or self.periodic_duty_factors):
            raise ValidationError("at least one availability model is required")

    @property
    def availability_keys(self):
        keys = [str(m) for m in self.sp_models]
        keys += [f"periodic-{df:g}" for df in self.periodic_duty_factors]
        return keys

    def to_dict(self):
        return {
            "n_units": list(self.n_units),
            "compute_price_factors": list(self.compute_price_factors),
            "power_prices": list(self.power_prices),
            "densities": list(self.densities),
            "sp_models": list(self.sp_models),
            "periodic_duty_factors": list(self.periodic_duty_factors),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kwargs)


def default_study_space(seed=0):
    return StudySpace(seed=seed)


def _scaled_trace(space, trace, n, density):
    scaled = scale_workload(trace, n + 1, seed=space.seed + n)
    return scale_job_size(scaled, density)


def _sim_task(space, trace, schedules, task, trace_cache):
    """One simulation of the sweep; `task` = (availability key, n, density)."""
    avail, n, density = task
    key = (n, density)
    if key not in trace_cache:
        trace_cache[key] = _scaled_trace(space, trace, n, density)
    dtrace = trace_cache[key]
    if avail == "always-on":
        config = SystemConfig(ctr_units=n + 1)
    else:
        config = SystemConfig(ctr_units=1, z_units=n, z_schedule=schedules[avail])
    return simulate(config, dtrace, seed=space.seed)


_POOL_CTX = {}


def _pool_init(space, trace, schedules):
    _POOL_CTX["args"] = (space, trace, schedules)
    _POOL_CTX["traces"] = {}


def _pool_run(task):
    space, trace, schedules = _POOL_CTX["args"]
    try:
        return task, _sim_task(space, trace, schedules, task, _POOL_CTX["traces"])
    except StrandsimError as exc:
        raise type(exc)(
            f"sweep cell [n={task[1]} density={task[2]:g}] failed: {exc}") from exc


def sweep_workers():
    """Worker count for sweep fan-out, from the environment (default 1)."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(space, trace, market, params=None, sim_cache=None, progress=None):
    """Evaluate every cell of the study space.

    `market` maps SP-model labels to calibrated SiteSeries sharing the
    trace's horizon.  Returns a list of row dicts (two per cell: the scaled
    datacenter system and the mixed system).  `sim_cache` may be a dict
    reused across calls; keys are (availability key, n, density).  Cells are
    independent; set the environment variable named by `WORKERS_ENV` to fan
    simulations out across processes (results are identical either way).
    """
    space.validate()
    base_params = params if params is not None else CostParams()
    cache = sim_cache if sim_cache is not None else {}

    schedules = {}
    for label in space.sp_models:
        if label not in market:
            raise ValidationError(f"no calibrated market series for model {label!r}")
        schedules[str(label)] = schedule_from_series(
            market[label], parse_model_label(label), horizon_s=trace.horizon_s)
    for df in space.periodic_duty_factors:
        schedules[f"periodic-{df:g}"] = periodic_schedule(df, trace.horizon_s)

    tasks = [task for n in sorted(space.n_units)
             for density in sorted(space.densities)
             for task in ([("always-on", n, density)] +
                          [(a, n, density) for a in sorted(schedules)])
             if task not in cache]
    workers = sweep_workers()
    if workers > 1 and len(tasks) > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=workers, initializer=_pool_init,
                                    initargs=(space, trace, schedules)) as pool:
            for task, result in pool.map(_pool_run, tasks):
                cache[task] = result
    else:
        trace_cache = {}
        for task in tasks:
            cell_id = f"n={task[1]} density={task[2]:g}"
            try:
                cache[task] = _sim_task(space, trace, schedules, task, trace_cache)
            except StrandsimError as exc:
                raise type(exc)(f"sweep cell [{cell_id}] failed: {exc}") from exc
            if progress is not None:
                progress(cell_id)

    rows = []
    for n in sorted(space.n_units):
        for density in sorted(space.densities):
            cell_id = f"n={n} density={density:g}"
            try:
                ctr_cfg = SystemConfig(ctr_units=n + 1)
                ctr_res = cache[("always-on", n, density)]
                for avail in sorted(schedules):
                    mixed_cfg = SystemConfig(ctr_units=1, z_units=n,
                                             z_schedule=schedules[avail])
                    mixed_res = cache[(avail, n, density)]
                    for price in sorted(space.power_prices):
                        for cfac in sorted(space.compute_price_factors):
                            p = (base_params
                                 .with_c_power(power_axis_cost(price))
                                 .with_compute_factor(compute_axis_cost(cfac) /
                                                      base_params.c_compute)
                                 .with_density(density))
                            tco_c = tco_traditional(n + 1, p)
                            tco_z = tco_mixed(1, n, p)
                            common = {
                                "n_units": n,
                                "availability": avail,
                                "power_price": price,
                                "compute_factor": cfac,
                                "density": density,
                            }
                            rows.append({**common,
                                         "config": ctr_cfg.label,
                                         "throughput": ctr_res.throughput_per_day,
                                         "tco_musd": tco_c.total,
                                         "throughput_per_musd":
                                             cost_performance(ctr_res, tco_c)})
                            rows.append({**common,
                                         "config": f"{mixed_cfg.label}({avail})",
                                         "throughput": mixed_res.throughput_per_day,
                                         "tco_musd": tco_z.total,
                                         "throughput_per_musd":
                                             cost_performance(mixed_res, tco_z)})
            except StrandsimError as exc:
                raise type(exc)(f"sweep cell [{cell_id}] failed: {exc}") from exc
    return rows


def advantage_by_axis(rows, n, availability, axis, baseline):
    """Mixed-over-datacenter throughput/M$ ratio along one axis.

    `baseline` fixes the other axes, e.g. {"power_price": 60.0,
    "compute_factor": 1.0, "density": 1.0}.  Returns [(axis value, ratio)].
    """
    out = []
    fixed = {k: v for k, v in baseline.items() if k != axis}
    values = sorted({r[axis] for r in rows})
    for v in values:
        sel = [r for r in rows
               if r["n_units"] == n and r["availability"] == availability
               and r[axis] == v
               and all(abs(r[k] - fv) < 1e-9 for k, fv in fixed.items())]
        ctr = [r for r in sel if "(" not in r["config"]]
        mix = [r for r in sel if "(" in r["config"]]
        if not ctr or not mix:
            continue
        out.append((v, mix[0]["throughput_per_musd"] / ctr[0]["throughput_per_musd"]))
    return out


SWEEP_FAMILY_AXES = {
    "power_price": "sweep_power_price.csv",
    "compute_factor": "sweep_compute_price.csv",
    "density": "sweep_density.csv",
}

SWEEP_BASELINE = {"power_price": 60.0, "compute_factor": 1.0, "density": 1.0}


def write_sweep_csvs(rows, out_dir):
    """Write the full grid plus one CSV per figure family (axis slice)."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    grid_path = os.path.join(out_dir, "sweep_grid.csv")
    grid_cols = ["n_units", "availability", "power_price", "compute_factor",
                 "density", "config", "throughput", "tco_musd", "throughput_per_musd"]
    with open(grid_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=grid_cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in grid_cols})
    written.append(grid_path)

    for axis, filename in SWEEP_FAMILY_AXES.items():
        path = os.path.join(out_dir, filename)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scale", "axis_value", "config", "throughput",
                             "tco_musd", "throughput_per_musd"])
            for row in rows:
                if all(abs(row[k] - v) < 1e-9
                       for k, v in SWEEP_BASELINE.items() if k != axis):
                    writer.writerow([row["n_units"], _fmt(row[axis]), row["config"],
                                     _fmt(row["throughput"]), _fmt(row["tco_musd"]),
                                     _fmt(row["throughput_per_musd"])])
        written.append(path)
    return written


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_generations_csv(points, path, budget=None, params=None):
    """Generations table CSV, optionally with PF affordable at a budget."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["year", "model", "peak_pflops", "mw"]
        if budget is not None:
            header += ["budget_musd", "trad_mw", "trad_pflops",
                       "stranded_mw", "stranded_pflops"]
        writer.writerow(header)
        for p in points:
            row = [p.year, p.model, _fmt(p.peak_pf), _fmt(round(p.mw, 3))]
            if budget is not None:
                trad = peak_pflops_per_budget(budget, "traditional", p, params)
                strn = peak_pflops_per_budget(budget, "stranded", p, params)
                row += [_fmt(float(budget)),
                        _fmt(round(trad.mw, 3)), _fmt(round(trad.peak_pflops, 1)),
                        _fmt(round(strn.mw, 3)), _fmt(round(strn.peak_pflops, 1))]
            writer.writerow(row)
