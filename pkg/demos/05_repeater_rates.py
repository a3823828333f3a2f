"""Entanglement distribution: rates, fidelities, and crossover distances.

Evaluates the full repeater pipeline at the best cavity quality
(K/kappa = 1e5): simulates the gate inventory, assembles the fidelity
budget, solves for the distances where the repeater overtakes direct
transmission, and checks the analytic waiting-time formula against the
Monte-Carlo protocol simulation.  Takes a couple of minutes (most of it
optimizing the drive pulses).
"""

import numpy as np

from catlink import repeater as rp
from catlink import scenarios as sn

# -- the analytic rate model ---------------------------------------------------
link = rp.LinkParams(length_km=50.0, operation_time_s=1e-4)
print(f"elementary link: P0 = {rp.p0(link):.5f} per attempt "
      f"({rp.attempt_time(link) * 1e3:.2f} ms per attempt)")

chain = rp.ChainParams(nesting_level=3, swap_probability=0.81)
print(f"n=3 chain mean time: {rp.mean_time(chain, link):.3f} s "
      f"({rp.distribution_rate(chain, link):.2f} pairs/s)")

mc_mean, mc_err = rp.monte_carlo_time(chain, link, trials=100_000, seed=1)
print(f"Monte-Carlo oracle:  {mc_mean:.3f} +/- {mc_err:.3f} s "
      f"(formula/MC = {rp.mean_time(chain, link) / mc_mean:.3f})")

# -- the full pipeline at the crossover points ----------------------------------
print("\nsimulating the gate inventory at K/kappa = 1e5 (GRAPE drive)...")
scenarios = [
    sn.Scenario(name="m=1, transfer storage", loss_ratio=1e5, nesting_level=3,
                multiplexing=1, storage_policy="transfer"),
    sn.Scenario(name="m=200, cat storage", loss_ratio=1e5, nesting_level=3,
                multiplexing=200, storage_policy="cat"),
]
budgets = {}
for sc, rep in zip(scenarios, sn.scenario_table(scenarios, budgets=budgets)):
    print(f"\n{sc.name}:")
    print(f"  crossover with a 1 GHz direct source: {rep.crossover_km:.1f} km")
    print(f"  rate there     : {rep.rate_per_s:.3g} pairs/s")
    print(f"  F_elem/F_swap  : {rep.elementary_fidelity:.4f} / {rep.swap_fidelity:.4f}")
    print(f"  residual C_R   : {rep.residual_coherence:.4f}")
    print(f"  final fidelity : {rep.final_fidelity:.4f}")

budget = budgets[1e5]
print("\nper-operation fidelities feeding the budget:")
for op in ("drive", "undrive", "x_half", "x_pi", "z_half", "cnot", "transduction"):
    print(f"  {op:12s} {budget.fidelities[op]:.6f}")

# -- comparators -----------------------------------------------------------------
print("\nrate comparison at 400 km (n=3):")
cat = sn.cat_rate_curve(scenarios[1], budget)
dlcz = rp.dlcz_rate_curve(nesting_level=3, multiplexing=200)
re = rp.re_rate_curve(nesting_level=3, multiplexing=200)
print(f"  cat scheme (m=200) : {cat(400.0):10.3g} pairs/s")
print(f"  rare-earth (m=200) : {re(400.0):10.3g} pairs/s "
      f"(fidelity ceiling ~{rp.RE_FIDELITY_CEILING})")
print(f"  DLCZ (m=200)       : {dlcz(400.0):10.3g} pairs/s "
      f"(fidelity ceiling ~{rp.DLCZ_FIDELITY_CEILING})")
print(f"  direct 1 GHz       : {rp.direct_transmission_rate(400.0):10.3g} pairs/s")
