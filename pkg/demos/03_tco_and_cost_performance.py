#!/usr/bin/env python3
"""Cost model walkthrough: amortization, TCO breakdowns, and the deltas
between scaling with datacenters versus stranded-power extensions.

Run:  python demos/03_tco_and_cost_performance.py
"""

from strandsim import (CostParams, amortize, baseline_capital_inputs,
                       tco_mixed, tco_stranded, tco_traditional)

print("Annualized capital costs of one 4 MW / 10 PFLOPS unit")
print("(3% cost of capital, component-specific amortization periods):\n")
for name, inp in baseline_capital_inputs().items():
    print(f"  {name:10s} capex ${inp.capex / 1e6:7.1f}M over {inp.years_l:>2.0f}y "
          f"-> ${amortize(inp):5.2f}M/yr")

params = CostParams()
print("\nAnnual TCO at baseline ($60/MWh power, 1x compute price):")
for label, report in [
    ("1Ctr", tco_traditional(1, params)),
    ("1Z  ", tco_stranded(1, params)),
    ("2Ctr", tco_traditional(2, params)),
    ("Ctr+1Z", tco_mixed(1, 1, params)),
    ("5Ctr", tco_traditional(5, params)),
    ("Ctr+4Z", tco_mixed(1, 4, params)),
]:
    parts = ", ".join(f"{k}={v:.1f}" for k, v in sorted(report.components.items())
                      if v)
    print(f"  {label:7s} ${report.total:6.1f}M/yr   ({parts})")

print("\nStranded-power units skip the building, power distribution and the")
print("electricity bill; containers and free cooling are far cheaper, so a")
print("unit costs $24.5M/yr instead of $44.9M/yr.\n")

print("Savings of Ctr+nZ over (n+1)Ctr across scenarios:")
rows = [
    ("power $30/MWh, 1Z", 1, params.with_c_power(1.1)),
    ("power $360/MWh, 4Z", 4, params.with_c_power(12.6)),
    ("0.25x compute, 1Z", 1, params.with_compute_factor(5.2 / 21)),
    ("0.25x compute, 4Z", 4, params.with_compute_factor(5.2 / 21)),
    ("1.5x compute, 1Z", 1, params.with_compute_factor(31.4 / 21)),
    ("1.5x compute, 4Z", 4, params.with_compute_factor(31.4 / 21)),
    ("density 1x, 4Z", 4, params),
    ("density 5x, 4Z", 4, params.with_density(5.0)),
]
for label, n, p in rows:
    ctr = tco_traditional(n + 1, p).total
    mix = tco_mixed(1, n, p).total
    print(f"  {label:20s} {(ctr - mix) / ctr:6.1%} cheaper "
          f"(${mix:.1f}M vs ${ctr:.1f}M)")
