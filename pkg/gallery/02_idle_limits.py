"""Reference values that need no optimization.

* An idle two-level system has susceptibility 1/3 to both relaxation and
  dephasing when averaged over the Bloch sphere.
* A displacement drive on a bare cavity leaves ``<a^dag a> - |<a>|^2``
  unchanged, so the photon-loss susceptibility of any codespace state stays
  at the code's mean photon number.

Run: python3 gallery/02_idle_limits.py
"""

import numpy as np

from bosonic_grape import build_code, make_space
from bosonic_grape.dynamics import ChannelKind
from bosonic_grape.error_model import idle_susceptibility, sigma_z_moment_stats, timecourse_from_states
from bosonic_grape.hilbert import NS
from bosonic_grape.propagation import StepPropagators
from bosonic_grape.pulse import Waveform

for kind in (ChannelKind.RELAXATION, ChannelKind.DEPHASING):
    print(f"idle {kind.value}: s = {idle_susceptibility(kind):.6f}")
std1, std2, mean = sigma_z_moment_stats()
print(f"over the Bloch sphere: Std<sz> = {std1:.4f}, Std<sz>^2 = {std2:.4f}, Ave<sz> = {mean:.1e}")

dim = 40
space = make_space(2, dim)
code = build_code("Bin11", dim)
psi0 = space.product_state(0, (code.zero_L + 1j * code.one_L) / np.sqrt(2))
n = 250
u = np.zeros((4, n))
u[2] = 0.4  # constant cavity drive in MHz, chi = 0 so it is a pure displacement
wf = Waveform(u, 2 * NS, n * 2 * NS)
states = StepPropagators(wf, space, 0.0).forward(psi0[:, None])[:, :, 0]
tc = timecourse_from_states(ChannelKind.CAVITY_LOSS, np.arange(n + 1) * wf.dt, states[:, None, :], space)
print(f"\ndisplaced Bin11 state after {wf.t_gate * 1e9:.0f} ns:")
print(f"  <n> went from {tc.p[0, 0]:.3f} to {tc.p[0, -1]:.3f}")
print(f"  s_loss stayed within {np.max(np.abs(tc.s - 2)):.1e} of 2")
