"""Annualized total-cost-of-ownership model for compute scale-up.

Costs are annual $M per 4 MW / 10 PFLOPS unit.  Traditional datacenter units
pay compute depreciation, facility (building, power distribution, cooling
plant) and electricity; stranded-power units swap the facility and power
components for containers, free-cooling hardware, checkpoint SSDs and
bridging batteries, and draw their power at zero cost.  Facility-class costs
scale with the power-density factor; compute depreciation does not.  Each
physical site group pays one network backbone charge.
"""

import json
import math
from dataclasses import dataclass, field, replace

from .errors import ConfigError, UndefinedValueError, ValidationError

HOURS_PER_YEAR = 8760.0

APPROACH_TRADITIONAL = "traditional"
APPROACH_STRANDED = "stranded"
APPROACH_MIXED = "mixed"

COMPONENTS = ("compute", "dcf", "power", "net", "ssd", "battery", "container", "cooling")

DEFAULT_RATE = 0.03       # cost of capital per year


@dataclass(frozen=True)
class AmortizationInput:
    """Capital expense converted to a constant annual payment."""

    price: float           # $ per size unit
    size: float            # quantity of size units
    years_l: float         # amortization period
    rate_r: float = DEFAULT_RATE

    def validate(self):
        if self.price <= 0 or self.size <= 0:
            raise ValidationError("price and size must be positive")
        if self.years_l < 1:
            raise ValidationError("amortization period must be at least one year")
        if self.rate_r <= 0:
            raise ConfigError("rate must be positive; straight-line fallback "
                              "is not applied implicitly")

    @property
    def capex(self):
        return self.price * self.size


def amortize(inp):
    """Annual payment in $M: r * CapEx / (1 - (1+r)^-l)."""
    inp.validate()
    r, l = inp.rate_r, inp.years_l
    return r * inp.capex / (1.0 - (1.0 + r) ** (-l)) / 1e6


def baseline_capital_inputs():
    """Capital plan of the reference 4 MW unit, one entry per component."""
    return {
        "compute": AmortizationInput(price=24e6, size=4, years_l=5),        # $/MW
        "net": AmortizationInput(price=13e3, size=500, years_l=10),         # $/mile
        "ssd": AmortizationInput(price=0.67, size=2e6, years_l=5),          # $/GB, 2 PB
        "battery": AmortizationInput(price=350, size=1000, years_l=5),      # $/kWh, 1 MWh
        "container": AmortizationInput(price=5e6, size=4, years_l=12),      # $/MW
        "cooling": AmortizationInput(price=700e3, size=4, years_l=10),      # $/MW
    }


def power_cost_musd(power_price, unit_mw=4.0):
    """Annual electricity bill for one unit at a $/MWh price, in $M."""
    return unit_mw * HOURS_PER_YEAR * power_price / 1e6


@dataclass(frozen=True)
class CostParams:
    """Annual cost parameters, $M per unit unless noted."""

    c_compute: float = 21.0
    c_dcf: float = 21.0
    c_power: float = 2.1
    c_net: float = 0.8         # $M/year per site group
    c_ssd: float = 0.3
    c_battery: float = 0.1
    c_ctnr: float = 2.0
    c_cool: float = 0.3
    density: float = 1.0       # MW growth per fixed hardware budget
    power_price: float | None = 60.0   # $/MWh; None when c_power is given directly
    unit_mw: float = 4.0
    unit_peak_pflops: float = 10.0

    def validate(self):
        for name in ("c_compute", "c_dcf", "c_power", "c_net", "c_ssd",
                     "c_battery", "c_ctnr", "c_cool"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if self.density <= 0:
            raise ValidationError("density must be positive")
        if self.power_price is not None:
            derived = power_cost_musd(self.power_price, self.unit_mw)
            if derived > 0 and abs(self.c_power - derived) / derived > 0.01:
                raise ValidationError(
                    f"c_power={self.c_power} inconsistent with power price "
                    f"{self.power_price} $/MWh (expected ~{derived:.3f})")

    @property
    def c_z_compute(self):
        return self.c_compute + self.c_ssd + self.c_battery

    def with_power_price(self, power_price):
        """Derive c_power from a $/MWh price."""
        return replace(self, power_price=power_price,
                       c_power=power_cost_musd(power_price, self.unit_mw))

    def with_c_power(self, c_power):
        """Set c_power directly (e.g. a published rounded value)."""
        return replace(self, c_power=c_power, power_price=None)

    def with_compute_factor(self, factor):
        return replace(self, c_compute=self.c_compute * factor)

    def with_density(self, density):
        return replace(self, density=density)

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "c_compute", "c_dcf", "c_power", "c_net", "c_ssd", "c_battery",
            "c_ctnr", "c_cool", "density", "power_price", "unit_mw",
            "unit_peak_pflops")}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# Built-in profile: the reference unit's published operating costs.
PROFILES = {"mira-baseline": CostParams()}


def load_params(source):
    """Load CostParams from a profile name or a JSON file path."""
    if source in PROFILES:
        return PROFILES[source]
    with open(source) as fh:
        params = CostParams.from_dict(json.load(fh))
    params.validate()
    return params


@dataclass(frozen=True)
class TcoReport:
    """Total annual cost with a per-component breakdown, $M/year."""

    approach: str
    n_units: int
    components: dict = field(default_factory=dict)

    @property
    def total(self):
        return sum(self.components.values())

    def validate(self):
        if set(self.components) - set(COMPONENTS):
            raise ValidationError("unknown cost component")
        if not math.isfinite(self.total):
            raise ValidationError("non-finite total")

    def to_dict(self):
        return {
            "approach": self.approach,
            "n_units": self.n_units,
            "total_musd_per_year": self.total,
            "components_musd_per_year": {k: self.components.get(k, 0.0)
                                         for k in COMPONENTS},
        }


def tco_traditional(n, params):
    """Annual cost of n always-on datacenter units."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    params.validate()
    report = TcoReport(APPROACH_TRADITIONAL, n, {
        "compute": n * params.c_compute,
        "dcf": n * params.c_dcf * params.density,
        "power": n * params.c_power * params.density,
        "net": params.c_net,
    })
    report.validate()
    return report


def tco_stranded(n, params):
    """Annual cost of n stranded-power units; electricity is free."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    params.validate()
    report = TcoReport(APPROACH_STRANDED, n, {
        "compute": n * params.c_compute,
        "ssd": n * params.c_ssd,
        "battery": n * params.c_battery,
        "container": n * params.c_ctnr * params.density,
        "cooling": n * params.c_cool * params.density,
        "net": params.c_net,
    })
    report.validate()
    return report


def tco_mixed(ctr_units, z_units, params):
    """Datacenter base plus stranded extension; two site groups, two
    backbone links (one when there is no stranded side)."""
    if ctr_units < 1:
        raise ValidationError("the base system needs at least 1 unit")
    base = tco_traditional(ctr_units, params)
    if z_units == 0:
        return base
    ext = tco_stranded(z_units, params)
    components = dict(base.components)
    for key, value in ext.components.items():
        components[key] = components.get(key, 0.0) + value
    report = TcoReport(APPROACH_MIXED, ctr_units + z_units, components)
    report.validate()
    return report


def cost_performance(result, report):
    """Throughput per $M of annual cost: jobs/day per $M/year."""
    if report.total <= 0:
        raise UndefinedValueError("cost-performance undefined for zero cost")
    return result.throughput_per_day / report.total
