"""Integrate a moving 1D sech pulse and report how well mass and energy are kept.

Run:  python3 demos/01_conservation.py
"""

from zakharov_lab import zakharov

ic = zakharov.InitialCondition(kind="sech", amplitude=1.0, width=1.0, velocity=0.5)
cfg = zakharov.SimConfig(dims=1, extent=40.0, points=256, initial=ic, cfl_constant=0.002, stop_time=1.0)
res = zakharov.run(cfg)

print(f"stopped by      {res.reason} after {res.steps} steps")
print(f"mass drift      {res.mass_drift:.2e} (relative)")
print(f"H drift rate    {res.hamiltonian_drift_rate:.2e} (relative per unit time)")
s = res.series
print(f"max|psi|        {s['max_psi'][0]:.6f} -> {s['max_psi'][-1]:.6f}")
