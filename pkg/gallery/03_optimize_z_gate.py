"""Optimize a logical Z gate on the Bin(1,1) code and look at its error budget.

A short Z gate converges in a few dozen iterations, which keeps this example
fast.  The budget compares the first-order susceptibility model with a full
Lindblad simulation.

Run: python3 gallery/03_optimize_z_gate.py [T_gate_us]
"""

import sys

from bosonic_grape import build_code, logical_unitary, make_problem, make_space, mhz_to_angular, optimize
from bosonic_grape.dynamics import standard_channels
from bosonic_grape.error_model import susceptibility_report
from bosonic_grape.hilbert import US

t_gate = float(sys.argv[1]) * US if len(sys.argv) > 1 else 0.4 * US
space = make_space(2, 20)
code = build_code("Bin11", 20)
target = logical_unitary(code, "Z", space)
chi = float(mhz_to_angular(-2.0))

problem = make_problem(space, code, target, t_gate, chi, target_cost=1e-4, max_iter=500)
gate = optimize(problem, seed=7)
print(f"{gate.n_iter} iterations, Psi1 = {gate.psi1:.2e} ({gate.message})")
print(f"peak amplitudes (MHz): {abs(gate.waveform.u).max(axis=1).round(2).tolist()}")

channels = standard_channels(kappa_inv=1000 * US, t1=100 * US, t_phi=25 * US)
report = susceptibility_report(gate, target, space, chi, channels)
print("\nsusceptibilities: " + ", ".join(f"{k.value} {v:.3f}" for k, v in report.s.items()))
print(f"r0 = {100 * report.r0:.4f}%  r' = {100 * report.r_prime:.4f}%  r_L = {100 * report.r_L:.4f}%")
print(f"model residual r_L - (r0 + r') = {100 * report.residual:+.4f}%")
