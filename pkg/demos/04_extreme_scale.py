#!/usr/bin/env python3
"""Extreme-scale projections: future generations, TCO at 39-232 MW, and
peak capability under a fixed budget.

Run:  python demos/04_extreme_scale.py
"""

from strandsim import (GenerationPoint, extreme_tco, extreme_throughput_cost_eff,
                       peak_pflops_per_budget, project_generations)

print("Projected top-system generations (compute ~20x, power ~3x per step):\n")
print(f"{'year':>6s} {'model':>12s} {'peak PF':>12s} {'MW':>10s}")
for p in project_generations(2032):
    print(f"{p.year:>6d} {p.model:>12s} {p.peak_pf:12,.0f} {p.mw:10,.0f}")

print("\nAnnual TCO at extreme scale (constant cost per MW):")
print(f"{'MW':>6s} {'traditional':>14s} {'stranded+base':>14s} {'saving':>8s}")
for mw in (39, 116, 232):
    t = extreme_tco(mw, "traditional")
    z = extreme_tco(mw, "stranded")
    print(f"{mw:>6d} {t:>13,.0f}M {z:>13,.0f}M {(t - z) / t:>7.1%}")

budget = 250.0
gen2022 = next(p for p in project_generations(2022)
               if p.year == 2022 and p.model == "doe")
trad = peak_pflops_per_budget(budget, "traditional", gen2022)
strn = peak_pflops_per_budget(budget, "stranded", gen2022)
nobase = peak_pflops_per_budget(budget, "stranded", gen2022, include_base=False)
print(f"\nLargest system at a ${budget:.0f}M/yr budget (2022 efficiency):")
print(f"  traditional:          {trad.mw:6.1f} MW -> {trad.peak_pflops:7,.0f} PF")
print(f"  stranded + 4MW base:  {strn.mw:6.1f} MW -> {strn.peak_pflops:7,.0f} PF "
      f"(+{strn.peak_pflops / trad.peak_pflops - 1:.0%})")
print(f"  stranded, no base:    {nobase.mw:6.1f} MW -> {nobase.peak_pflops:7,.0f} PF "
      f"(+{nobase.peak_pflops / trad.peak_pflops - 1:.0%})")

print("\nThroughput-weighted cost-effectiveness at 232 MW (stranded side at")
print("an 80% duty factor):")
t_eff = extreme_throughput_cost_eff(232, "traditional")
z_eff = extreme_throughput_cost_eff(232, "stranded", duty_factor=0.8)
print(f"  traditional: {t_eff:7.0f} effective MWh per $M")
print(f"  stranded:    {z_eff:7.0f} effective MWh per $M (+{z_eff / t_eff - 1:.0%})")
