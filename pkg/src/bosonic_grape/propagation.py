"""Piecewise-constant step propagators shared by GRAPE and the dynamics.

Every control step ``j`` uses ``H_j = H0 + sum_k 2 pi u_kj H_k`` (``u`` in MHz)
and ``U_j = exp(-i H_j dt)``, obtained from one batched Hermitian
eigendecomposition.  The same eigendata give exact derivatives of ``U_j``.
"""

from __future__ import annotations

import numpy as np

from .hilbert import MHZ, TWO_PI, SpaceDescriptor, build_static_hamiltonian, control_generators
from .pulse import Waveform


class StepPropagators:
    """Eigendecomposed step Hamiltonians for one waveform.

    Parameters
    ----------
    waveform : Waveform
        Control amplitudes in MHz, shape ``(4, N)``.
    space : SpaceDescriptor
    chi : float
        Dispersive shift in rad/s.
    """

    def __init__(self, waveform: Waveform, space: SpaceDescriptor, chi: float):
        self.space = space
        self.chi = chi
        self.dt = waveform.dt
        self.h0 = build_static_hamiltonian(space, chi)
        self.generators = control_generators(space)
        scale = TWO_PI * MHZ
        d = space.total_dim
        h = (scale * waveform.u.T @ self.generators.reshape(len(self.generators), d * d)).reshape(-1, d, d)
        h += self.h0
        self.hamiltonians = h
        self.evals, self.evecs = np.linalg.eigh(h)
        self.phases = np.exp(-1j * self.evals * self.dt)

    @property
    def n_steps(self) -> int:
        return self.evals.shape[0]

    def unitaries(self) -> np.ndarray:
        v = self.evecs
        return (v * self.phases[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))

    def partial_unitaries(self, fraction: float) -> np.ndarray:
        """``exp(-i H_j fraction dt)`` for every step."""
        v = self.evecs
        ph = np.exp(-1j * self.evals * self.dt * fraction)
        return (v * ph[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))

    def total(self) -> np.ndarray:
        u_tot = np.eye(self.space.total_dim, dtype=complex)
        for u in self.unitaries():
            u_tot = u @ u_tot
        return u_tot

    def step(self, j: int, states: np.ndarray) -> np.ndarray:
        """Apply ``U_j`` to column states of shape ``(dim, m)``."""
        v = self.evecs[j]
        return v @ (self.phases[j][:, None] * (v.conj().T @ states))

    def step_adjoint(self, j: int, states: np.ndarray) -> np.ndarray:
        v = self.evecs[j]
        return v @ (np.conj(self.phases[j])[:, None] * (v.conj().T @ states))

    def forward(self, psi0: np.ndarray) -> np.ndarray:
        """States before each step and after the last, shape ``(N + 1, dim, m)``."""
        psi = np.asarray(psi0, dtype=complex)
        squeeze = psi.ndim == 1
        if squeeze:
            psi = psi[:, None]
        out = np.empty((self.n_steps + 1,) + psi.shape, dtype=complex)
        out[0] = psi
        for j in range(self.n_steps):
            psi = self.step(j, psi)
            out[j + 1] = psi
        return out[..., 0] if squeeze else out

    def divided_differences(self) -> np.ndarray:
        """Divided differences of ``exp(-i lambda dt)`` over eigenvalue pairs, shape ``(N, d, d)``.

        Written as ``-i dt exp(-i (la + lb) dt / 2) sinc((la - lb) dt / 2)``,
        which stays accurate for (near-)degenerate pairs.
        """
        return _dd_single(self.evals, self.dt)

    def step_derivative(self, j: int, op: np.ndarray) -> np.ndarray:
        """Exact ``d/de exp(-i (H_j + e op) dt)`` at ``e = 0``."""
        v = self.evecs[j]
        phi = _dd_single(self.evals[j], self.dt)
        return v @ (phi * (v.conj().T @ op @ v)) @ v.conj().T


def _dd_single(lam: np.ndarray, dt: float) -> np.ndarray:
    # -i dt h_a h_b sin(x_a - x_b) / (x_a - x_b), x = lam dt / 2, h = exp(-i x),
    # assembled from per-eigenvalue factors to avoid elementwise transcendentals
    x = 0.5 * dt * lam
    h = np.exp(-1j * x)
    s, c = np.sin(x), np.cos(x)
    dx = x[..., :, None] - x[..., None, :]
    num = s[..., :, None] * c[..., None, :] - c[..., :, None] * s[..., None, :]
    small = np.abs(dx) < 1e-4
    safe = np.where(small, 1.0, dx)
    ratio = np.where(small, 1.0 - dx * dx / 6.0, num / safe)
    return (-1j * dt) * (h[..., :, None] * h[..., None, :]) * ratio


def total_propagator(
    waveform: Waveform,
    space: SpaceDescriptor,
    chi: float,
    probe: np.ndarray | None = None,
) -> np.ndarray:
    """``U_{N-1} ... U_1 U_0`` for the waveform.

    If ``probe`` states are given, the truncation monitor is applied to
    their images and may raise :class:`~bosonic_grape.hilbert.TruncationError`.
    """
    steps = StepPropagators(waveform, space, chi)
    u = steps.total()
    if probe is not None:
        space.check_leakage(np.atleast_2d(probe) @ u.T, vectors=True)
    return u
