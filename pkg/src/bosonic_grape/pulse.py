"""Fourier-series control waveforms.

Each of the four controls is ``u_k(t) = c0_k + sum_l a_kl cos(2 pi f_l t) +
b_kl sin(2 pi f_l t)`` with ``f_l = l f_max / M``, sampled at ``t_j = j dt``.
Amplitudes are ordinary frequencies in MHz, times are in seconds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hilbert import CONTROL_NAMES, MHZ, NS

N_CONTROLS = 4


def default_harmonics(f_max: float, t_gate: float) -> int:
    """Smallest ``M`` with ``M >= f_max * T_gate`` (``f_max`` in Hz, ``t_gate`` in s)."""
    return max(1, math.ceil(f_max * t_gate - 1e-9))


@dataclass(frozen=True)
class PulseParams:
    """Fourier coefficients of the four controls.

    ``c0`` has shape ``(4,)``; ``a`` and ``b`` have shape ``(4, M)``.
    ``f_max`` is in Hz and ``t_gate`` in seconds.
    """

    c0: np.ndarray
    a: np.ndarray
    b: np.ndarray
    f_max: float
    t_gate: float
    n_steps: int
    seed: int | None = None
    check_bandwidth: bool = field(default=True, compare=False)

    def __post_init__(self):
        c0 = np.asarray(self.c0, dtype=float).reshape(N_CONTROLS)
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape or a.shape[0] != N_CONTROLS:
            raise ValueError(f"a and b must have shape (4, M), got {a.shape} and {b.shape}")
        if self.n_steps < 2:
            raise ValueError("need at least two time steps")
        if self.t_gate <= 0 or self.f_max <= 0:
            raise ValueError("t_gate and f_max must be positive")
        if self.check_bandwidth and a.shape[1] < default_harmonics(self.f_max, self.t_gate):
            raise ValueError(
                f"M = {a.shape[1]} is below ceil(f_max * T_gate) = "
                f"{default_harmonics(self.f_max, self.t_gate)}"
            )
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_harmonics(self) -> int:
        return self.a.shape[1]

    @property
    def dt(self) -> float:
        return self.t_gate / self.n_steps

    @property
    def n_params(self) -> int:
        return N_CONTROLS * (2 * self.n_harmonics + 1)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(1, self.n_harmonics + 1) * self.f_max / self.n_harmonics

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    def to_vector(self) -> np.ndarray:
        """Flatten as ``[c0_k, a_k1..a_kM, b_k1..b_kM]`` for each control in turn."""
        return np.concatenate([self.c0[:, None], self.a, self.b], axis=1).ravel()

    def with_vector(self, x: np.ndarray) -> "PulseParams":
        blocks = np.asarray(x, dtype=float).reshape(N_CONTROLS, 2 * self.n_harmonics + 1)
        m = self.n_harmonics
        return replace(self, c0=blocks[:, 0], a=blocks[:, 1 : m + 1], b=blocks[:, m + 1 :])

    def to_json(self) -> str:
        return json.dumps(
            {
                "M": self.n_harmonics,
                "f_max_MHz": self.f_max / MHZ,
                "T_gate_us": self.t_gate * 1e6,
                "N": self.n_steps,
                "seed": self.seed,
                "c0": self.c0.tolist(),
                "a": self.a.tolist(),
                "b": self.b.tolist(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "PulseParams":
        d = json.loads(text)
        return cls(
            c0=np.array(d["c0"]),
            a=np.array(d["a"]),
            b=np.array(d["b"]),
            f_max=d["f_max_MHz"] * MHZ,
            t_gate=d["T_gate_us"] * 1e-6,
            n_steps=int(d["N"]),
            seed=d.get("seed"),
        )


def zero_params(f_max: float, t_gate: float, dt: float, n_harmonics: int | None = None, seed=None) -> PulseParams:
    """All-zero coefficients for a gate of length ``t_gate`` with step ``dt``."""
    n_steps = int(round(t_gate / dt))
    if not math.isclose(n_steps * dt, t_gate, rel_tol=1e-9):
        raise ValueError(f"T_gate = {t_gate} is not a multiple of dt = {dt}")
    m = n_harmonics or default_harmonics(f_max, t_gate)
    z = np.zeros((N_CONTROLS, m))
    return PulseParams(np.zeros(N_CONTROLS), z, z.copy(), f_max, t_gate, n_steps, seed)


def random_params(template: PulseParams, u_max, seed: int) -> PulseParams:
    """I.i.d. uniform coefficients in ``[-u_max/(4M), u_max/(4M)]`` per control."""
    rng = np.random.default_rng(seed)
    m = template.n_harmonics
    scale = np.broadcast_to(np.asarray(u_max, dtype=float), (N_CONTROLS,)) / (4 * m)
    x = rng.uniform(-1.0, 1.0, size=(N_CONTROLS, 2 * m + 1)) * scale[:, None]
    return replace(template.with_vector(x.ravel()), seed=seed)


@dataclass(frozen=True)
class Waveform:
    u: np.ndarray  # (4, N), MHz
    dt: float
    t_gate: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] != N_CONTROLS:
            raise ValueError(f"waveform must have shape (4, N), got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("waveform has non-finite entries")
        object.__setattr__(self, "u", u)

    @property
    def n_steps(self) -> int:
        return self.u.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    @classmethod
    def zeros(cls, n_steps: int, dt: float) -> "Waveform":
        return cls(np.zeros((N_CONTROLS, n_steps)), dt, n_steps * dt)

    def to_csv(self) -> str:
        lines = ["t_ns," + ",".join(f"{n}_MHz" for n in CONTROL_NAMES)]
        for t, col in zip(self.times, self.u.T):
            lines.append(f"{t / NS:.6f}," + ",".join(f"{v:.12g}" for v in col))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "Waveform":
        data = np.loadtxt(text.splitlines(), delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0] * NS
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(data[:, 1:].T, dt, dt * len(t))


def basis_matrix(params: PulseParams) -> np.ndarray:
    """Per-control map from ``[c0, a_1..a_M, b_1..b_M]`` to samples, shape ``(N, 2M+1)``."""
    phase = 2 * np.pi * np.outer(params.times, params.frequencies)
    return np.concatenate([np.ones((params.n_steps, 1)), np.cos(phase), np.sin(phase)], axis=1)


def synthesize(params: PulseParams) -> Waveform:
    coeffs = params.to_vector().reshape(N_CONTROLS, -1)
    u = coeffs @ basis_matrix(params).T
    return Waveform(u, params.dt, params.t_gate)


def jacobian(params: PulseParams) -> np.ndarray:
    """Block-diagonal derivative ``d u_kj / d x``, shape ``(4 * N, n_params)``.

    Rows are ordered control-major, matching ``Waveform.u.ravel()``.
    """
    block = basis_matrix(params)
    n, p = block.shape
    jac = np.zeros((N_CONTROLS * n, N_CONTROLS * p))
    for k in range(N_CONTROLS):
        jac[k * n : (k + 1) * n, k * p : (k + 1) * p] = block
    return jac


def pullback(params: PulseParams, grad_u: np.ndarray) -> np.ndarray:
    """Chain rule ``dPsi/dx = sum_j dPsi/du_j du_j/dx`` without forming the full Jacobian."""
    return (np.asarray(grad_u).reshape(N_CONTROLS, -1) @ basis_matrix(params)).ravel()
