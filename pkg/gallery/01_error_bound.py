"""Achievable gate error as a function of gate time and dephasing time.

The total error of an optimized gate is modelled as an intrinsic part that
falls off exponentially with gate time plus a decoherence part that grows
linearly with it.  The minimum over gate time sets the best achievable error
for given coherence times.

Run: python3 gallery/01_error_bound.py
"""

import numpy as np

from bosonic_grape.error_model import ErrorBoundParams, bound_heatmap, decoherence_bound, minimize_bound
from bosonic_grape.hilbert import NS, US

params = ErrorBoundParams()  # Bin(1,1) Hadamard values, T1 = 100 us, Tphi = 25 us, 1/kappa = 1 ms
print(f"decoherence part at 1 us: {100 * decoherence_bound(1 * US, params):.3f}%")

print("\nbest gate time for each dephasing time")
print(f"{'Tphi (us)':>10}{'T_opt (ns)':>12}{'r_min (%)':>11}")
for t_phi in (25, 31, 37, 46, 60, 85, 150):
    t, r = minimize_bound(params.with_(t_phi=t_phi * US))
    print(f"{t_phi:>10}{t / NS:>12.0f}{100 * r:>11.3f}")

# coarse text rendering of the heatmap, rows are Tphi and columns gate time
t_axis = np.linspace(0.2, 2.0, 10) * US
tphi_axis = np.array([10, 20, 40, 80]) * US
grid = 100 * bound_heatmap(t_axis, tphi_axis, params)
print("\nbound in percent")
print("Tphi\\T " + "".join(f"{t / US:>6.1f}" for t in t_axis))
for tp, row in zip(tphi_axis, grid):
    print(f"{tp / US:>6.0f} " + "".join(f"{v:>6.2f}" for v in row))
