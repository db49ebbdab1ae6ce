"""Follow the cavity through a Hadamard gate.

Optimizes a Bin(1,1) Hadamard to a loose tolerance (or loads one written by
``bosonic-grape optimize``), then propagates ``|g>|0_L>`` and prints the
photon number, transmon excitation and transmon-cavity entanglement along the
way, plus the cavity Wigner function value at the origin.

Run: python3 gallery/04_hadamard_trajectory.py [params.json]
"""

import sys
from pathlib import Path

from bosonic_grape import build_code, logical_unitary, make_problem, make_space, mhz_to_angular, optimize
from bosonic_grape.codes import evaluation_states
from bosonic_grape.dynamics import propagate_closed
from bosonic_grape.hilbert import NS, US
from bosonic_grape.metrics import wigner_grid
from bosonic_grape.pulse import PulseParams, synthesize

space = make_space(2, 30)
code = build_code("Bin11", 30)
target = logical_unitary(code, "Hadamard", space)
chi = float(mhz_to_angular(-2.0))

if len(sys.argv) > 1:
    waveform = synthesize(PulseParams.from_json(Path(sys.argv[1]).read_text()))
else:
    problem = make_problem(space, code, target, 1 * US, chi, target_cost=1e-2, max_iter=400)
    gate = optimize(problem, seed=11)
    print(f"optimized in {gate.n_iter} iterations, Psi1 = {gate.psi1:.2e}")
    waveform = gate.waveform

psi0 = evaluation_states(target)[0]
traj = propagate_closed(waveform, space, chi, psi0, stride=50)
print(f"\n{'t (ns)':>7}{'<n>':>8}{'P_e':>8}{'S':>8}{'W(0)':>9}")
for t, n, pe, s, state in zip(traj.times, traj.mean_photon, traj.transmon_excitation, traj.entropy, traj.states):
    rho_cav = space.partial_trace_transmon(state[:, None] * state.conj()[None, :])
    w0 = wigner_grid(rho_cav, [0.0], [0.0])[0, 0]
    print(f"{t / NS:>7.0f}{n:>8.3f}{pe:>8.3f}{s:>8.3f}{w0:>9.3f}")
ideal = target.target_unitary @ psi0
print(f"\nfinal overlap with |g>|+_L>: {abs(ideal.conj() @ traj.final) ** 2:.4f}")
