"""Closed and open time evolution under piecewise-constant controls.

The open-system integrator is a fixed-step fourth-order Runge-Kutta scheme in
the interaction picture of each step's Hamiltonian: the coherent part is
applied exactly with the step's eigendecomposition and only the dissipator
is integrated numerically.  With all rates zero it reproduces the closed
evolution to rounding error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .codes import LogicalGate, evaluation_states
from .hilbert import NS, SpaceDescriptor, TruncationError  # noqa: F401
from .metrics import entanglement_entropy, state_fidelity
from .propagation import StepPropagators
from .pulse import Waveform


class ChannelKind(str, enum.Enum):
    CAVITY_LOSS = "CavityLoss"
    RELAXATION = "TransmonRelaxation"
    DEPHASING = "TransmonDephasing"
    THERMAL = "TransmonThermal"


TRANSMON_CHANNELS = (ChannelKind.RELAXATION, ChannelKind.DEPHASING, ChannelKind.THERMAL)


def jump_operator(kind: ChannelKind | str, space: SpaceDescriptor) -> np.ndarray:
    kind = ChannelKind(kind)
    if kind is ChannelKind.CAVITY_LOSS:
        return space.a
    if kind is ChannelKind.RELAXATION:
        return space.sigma_minus
    if kind is ChannelKind.DEPHASING:
        return space.sigma_z / np.sqrt(2)
    return space.sigma_plus


@dataclass(frozen=True)
class DecoherenceChannel:
    """A jump operator with its rate in 1/s."""

    kind: ChannelKind
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if not self.rate >= 0:
            raise ValueError(f"rate must be >= 0, got {self.rate}")

    def jump(self, space: SpaceDescriptor) -> np.ndarray:
        return jump_operator(self.kind, space)

    def scaled(self, factor: float) -> "DecoherenceChannel":
        return DecoherenceChannel(self.kind, self.rate * factor)


def standard_channels(
    kappa_inv: float | None = None,
    t1: float | None = None,
    t_phi: float | None = None,
    n_th: float = 0.0,
) -> list[DecoherenceChannel]:
    """Channels from lifetimes in seconds; ``None`` (or ``inf``) disables a channel.

    Thermal excitation uses rate ``n_th / T1``.
    """
    out = []

    def rate(life):
        return 0.0 if life is None or not np.isfinite(life) else 1.0 / life

    if rate(kappa_inv) > 0:
        out.append(DecoherenceChannel(ChannelKind.CAVITY_LOSS, rate(kappa_inv)))
    if rate(t1) > 0:
        out.append(DecoherenceChannel(ChannelKind.RELAXATION, rate(t1)))
        if n_th > 0:
            out.append(DecoherenceChannel(ChannelKind.THERMAL, n_th * rate(t1)))
    if rate(t_phi) > 0:
        out.append(DecoherenceChannel(ChannelKind.DEPHASING, rate(t_phi)))
    return out


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    mean_photon: np.ndarray
    transmon_excitation: np.ndarray
    entropy: np.ndarray = field(default=None)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        lines = ["t_ns,mean_photon,transmon_excitation,entropy"]
        ent = self.entropy if self.entropy is not None else np.full(len(self.times), np.nan)
        for row in zip(self.times / NS, self.mean_photon, self.transmon_excitation, ent):
            lines.append(",".join(f"{v:.12g}" for v in row))
        return "\n".join(lines) + "\n"


def _sample_indices(n_steps: int, stride: int) -> list[int]:
    idx = list(range(0, n_steps + 1, max(1, int(stride))))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return idx


def propagate_closed(
    waveform: Waveform,
    space: SpaceDescriptor,
    chi: float,
    psi0: np.ndarray,
    stride: int = 1,
    monitor: bool = True,
    steps: StepPropagators | None = None,
) -> Trajectory:
    """Schrodinger evolution of a pure state, sampled every ``stride`` steps."""
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("psi0 must be normalized")
    steps = steps or StepPropagators(waveform, space, chi)
    states = steps.forward(psi0)
    if monitor:
        space.check_leakage(states, vectors=True)
    idx = _sample_indices(steps.n_steps, stride)
    sampled = states[idx]
    n_diag = np.real(np.diag(space.n_cavity))
    e_diag = np.real(np.diag(space.proj_e))
    probs = np.abs(sampled) ** 2
    return Trajectory(
        times=np.array(idx) * waveform.dt,
        states=sampled,
        mean_photon=probs @ n_diag,
        transmon_excitation=probs @ e_diag,
        entropy=np.array([entanglement_entropy(s, space) for s in sampled]),
    )


class _Dissipator:
    def __init__(self, space: SpaceDescriptor, channels):
        self.jumps = [(c.rate, c.jump(space)) for c in channels if c.rate > 0]
        d = space.total_dim
        self.anti = np.zeros((d, d), dtype=complex)
        for rate, l_op in self.jumps:
            self.anti += 0.5 * rate * (l_op.conj().T @ l_op)
        self.jumps_h = [(rate, l_op, l_op.conj().T) for rate, l_op in self.jumps]

    def __bool__(self):
        return bool(self.jumps)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        ar = self.anti @ rho
        out = -(ar + np.conj(np.swapaxes(ar, -1, -2)))
        for rate, l_op, l_dag in self.jumps_h:
            out += rate * (l_op @ rho @ l_dag)
        return out


def _rk4ip_step(rho, u_half, u_half_h, diss, h):
    def rot(x):
        return u_half @ x @ u_half_h

    rho_i = rot(rho)
    k1 = rot(diss(rho))
    k2 = diss(rho_i + 0.5 * h * k1)
    k3 = diss(rho_i + 0.5 * h * k2)
    k4 = diss(rot(rho_i + h * k3))
    return rot(rho_i + (h / 6.0) * (k1 + 2 * k2 + 2 * k3)) + (h / 6.0) * k4


def propagate_open(
    waveform: Waveform,
    space: SpaceDescriptor,
    chi: float,
    rho0: np.ndarray,
    channels=(),
    stride: int = 1,
    substeps: int = 4,
    trace_tol: float = 1e-9,
    max_refine: int = 4,
    monitor: bool = True,
    steps: StepPropagators | None = None,
) -> Trajectory:
    """Lindblad evolution of one density matrix or a batch ``(m, d, d)``.

    Each control step is split into ``substeps`` RK4 steps; a step whose
    trace drift exceeds ``trace_tol`` is redone with twice as many substeps,
    up to ``max_refine`` doublings.
    """
    rho = np.asarray(rho0, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.ndim == 3 and rho.shape[1] != rho.shape[2] or rho.shape[-1] != space.total_dim:
        raise ValueError("rho0 has the wrong shape")
    if np.any(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1) > 1e-8):
        raise ValueError("rho0 must have unit trace")
    steps = steps or StepPropagators(waveform, space, chi)
    diss = _Dissipator(space, channels)
    n = steps.n_steps
    idx = set(_sample_indices(n, stride))
    samples = [rho.copy()]
    cache: dict[int, np.ndarray] = {}

    def half_unitaries(sub):
        if sub not in cache:
            cache[sub] = steps.partial_unitaries(0.5 / sub)
        return cache[sub]

    v_all = steps.evecs
    for j in range(n):
        if not diss:
            v = v_all[j]
            u = (v * steps.phases[j]) @ v.conj().T
            rho = u @ rho @ u.conj().T
        else:
            start_trace = np.real(np.trace(rho, axis1=-2, axis2=-1))
            for attempt in range(max_refine + 1):
                sub = substeps * 2**attempt
                uh = half_unitaries(sub)[j]
                uhh = uh.conj().T
                h = steps.dt / sub
                trial = rho
                for _ in range(sub):
                    trial = _rk4ip_step(trial, uh, uhh, diss, h)
                drift = np.max(np.abs(np.real(np.trace(trial, axis1=-2, axis2=-1)) - start_trace))
                if drift <= trace_tol:
                    break
            else:
                raise FloatingPointError(
                    f"trace drift {drift:.3g} at step {j} persists after {max_refine} refinements"
                )
            rho = trial
        if monitor:
            space.check_leakage(rho)
        if j + 1 in idx:
            samples.append(rho.copy())
    states = np.stack(samples)
    n_diag = np.real(np.diag(space.n_cavity))
    e_diag = np.real(np.diag(space.proj_e))
    pops = np.real(np.diagonal(states, axis1=-2, axis2=-1))
    times = np.array(sorted(idx)) * waveform.dt
    return Trajectory(times, states, pops @ n_diag, pops @ e_diag, None)


def _wf(gate) -> Waveform:
    return gate if isinstance(gate, Waveform) else gate.waveform


def gate_fidelity_closed(gate, target: LogicalGate, space: SpaceDescriptor, chi: float) -> tuple[float, float]:
    """Six-state average overlap between the propagated and ideal outputs; returns ``(F0, r0)``."""
    steps = StepPropagators(_wf(gate), space, chi)
    psi = evaluation_states(target)
    final = steps.forward(psi.T)[-1].T
    ideal = psi @ target.target_unitary.T
    f0 = float(np.mean(np.abs(np.sum(ideal.conj() * final, axis=1)) ** 2))
    return f0, 1.0 - f0


def gate_fidelity_open(
    gate,
    target: LogicalGate,
    space: SpaceDescriptor,
    chi: float,
    channels=(),
    substeps: int = 4,
) -> tuple[float, float]:
    """Six-state average fidelity under Lindblad evolution; returns ``(F, r_L)``."""
    wf = _wf(gate)
    psi = evaluation_states(target)
    rho0 = np.einsum("ka,kb->kab", psi, psi.conj())
    traj = propagate_open(wf, space, chi, rho0, channels, stride=10**9, substeps=substeps)
    final = traj.final
    ideal = psi @ target.target_unitary.T
    f = float(np.mean([state_fidelity(t, r) for t, r in zip(ideal, final)]))
    return f, 1.0 - f


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.min(np.linalg.eigvalsh((rho + np.conj(np.swapaxes(rho, -1, -2))) / 2)))
