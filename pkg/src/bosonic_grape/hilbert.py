"""Transmon-cavity Hilbert space and operator algebra.

Operators are dense ``numpy`` complex arrays.  The tensor ordering is fixed
as ``transmon (x) cavity`` everywhere in the package, so a product basis
index is ``q * cavity_dim + n`` with transmon level ``q`` (0 = |g>, 1 = |e>)
and Fock index ``n``.

Frequencies are angular (rad/s) internally.  User-facing values are
ordinary frequencies in MHz; use :func:`mhz_to_angular` on ingestion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi
MHZ = 1e6
US = 1e-6
NS = 1e-9

#: Population in the top Fock levels above which a propagation is rejected.
LEAKAGE_LIMIT = 0.01
LEAKAGE_LEVELS = 3


class TruncationError(RuntimeError):
    """Raised when population reaches the top of the truncated cavity."""


def mhz_to_angular(f_mhz):
    return TWO_PI * MHZ * np.asarray(f_mhz, dtype=float)


def destroy(dim: int) -> np.ndarray:
    """Truncated annihilation operator on ``dim`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def fock(dim: int, n: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def is_hermitian(op: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(op - dag(op)), initial=0.0) <= atol)


@dataclass(frozen=True)
class SpaceDescriptor:
    """Truncated ``transmon (x) cavity`` product space.

    Only the lowest two transmon levels carry the qubit operators; any extra
    levels (``transmon_dim > 2``) are spectators.
    """

    transmon_dim: int = 2
    cavity_dim: int = 30
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.transmon_dim) < 2 or int(self.cavity_dim) < 2:
            raise ValueError(
                f"both dimensions must be >= 2, got transmon_dim={self.transmon_dim}, "
                f"cavity_dim={self.cavity_dim}"
            )

    @property
    def total_dim(self) -> int:
        return self.transmon_dim * self.cavity_dim

    @cached_property
    def id_transmon(self) -> np.ndarray:
        return np.eye(self.transmon_dim, dtype=complex)

    @cached_property
    def id_cavity(self) -> np.ndarray:
        return np.eye(self.cavity_dim, dtype=complex)

    @cached_property
    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=complex)

    # single-factor qubit operators, embedded in the lowest two levels
    def _qubit(self, m2: np.ndarray) -> np.ndarray:
        out = np.zeros((self.transmon_dim,) * 2, dtype=complex)
        out[:2, :2] = m2
        return out

    @cached_property
    def sigma_minus_t(self) -> np.ndarray:
        # |g><e|
        return self._qubit(np.array([[0, 1], [0, 0]]))

    @cached_property
    def sigma_x_t(self) -> np.ndarray:
        return self._qubit(np.array([[0, 1], [1, 0]]))

    @cached_property
    def sigma_y_t(self) -> np.ndarray:
        # sigma_+ = |e><g| = (sigma_x + i sigma_y) / 2
        return self._qubit(np.array([[0, 1j], [-1j, 0]]))

    @cached_property
    def sigma_z_t(self) -> np.ndarray:
        # +1 on |e>, -1 on |g>
        return self._qubit(np.diag([-1.0, 1.0]))

    @cached_property
    def proj_e_t(self) -> np.ndarray:
        return self._qubit(np.diag([0.0, 1.0]))

    @cached_property
    def proj_g_t(self) -> np.ndarray:
        return self._qubit(np.diag([1.0, 0.0]))

    def on_transmon(self, op: np.ndarray) -> np.ndarray:
        return np.kron(op, self.id_cavity)

    def on_cavity(self, op: np.ndarray) -> np.ndarray:
        return np.kron(self.id_transmon, op)

    @cached_property
    def a(self) -> np.ndarray:
        return self.on_cavity(destroy(self.cavity_dim))

    @cached_property
    def n_cavity(self) -> np.ndarray:
        return self.on_cavity(np.diag(np.arange(self.cavity_dim, dtype=complex)))

    @cached_property
    def sigma_minus(self) -> np.ndarray:
        return self.on_transmon(self.sigma_minus_t)

    @cached_property
    def sigma_plus(self) -> np.ndarray:
        return dag(self.sigma_minus)

    @cached_property
    def sigma_x(self) -> np.ndarray:
        return self.on_transmon(self.sigma_x_t)

    @cached_property
    def sigma_y(self) -> np.ndarray:
        return self.on_transmon(self.sigma_y_t)

    @cached_property
    def sigma_z(self) -> np.ndarray:
        return self.on_transmon(self.sigma_z_t)

    @cached_property
    def proj_e(self) -> np.ndarray:
        return self.on_transmon(self.proj_e_t)

    def product_state(self, transmon: np.ndarray | int, cavity: np.ndarray | int) -> np.ndarray:
        """``|transmon> (x) |cavity>``; integers are basis indices."""
        if np.ndim(transmon) == 0:
            transmon = fock(self.transmon_dim, int(transmon))
        if np.ndim(cavity) == 0:
            cavity = fock(self.cavity_dim, int(cavity))
        return np.kron(np.asarray(transmon, dtype=complex), np.asarray(cavity, dtype=complex))

    def top_population(self, state: np.ndarray, levels: int = LEAKAGE_LEVELS, vectors: bool = False) -> float:
        """Population in the top ``levels`` Fock states.

        ``state`` is a vector, a density matrix or a stack of density
        matrices. With ``vectors=True`` it is a stack of state vectors instead.
        The largest population over the stack is returned.
        """
        state = np.asarray(state)
        if state.ndim == 1 or vectors:
            pops = np.abs(state) ** 2
        else:
            pops = np.real(np.diagonal(state, axis1=-2, axis2=-1))
        pops = pops.reshape(pops.shape[:-1] + (self.transmon_dim, self.cavity_dim))
        return float(np.max(np.sum(pops[..., -levels:], axis=(-2, -1))))

    def check_leakage(self, state: np.ndarray, limit: float = LEAKAGE_LIMIT, vectors: bool = False) -> None:
        leak = self.top_population(state, vectors=vectors)
        if leak > limit:
            raise TruncationError(
                f"{leak:.3g} of the population sits in the top {LEAKAGE_LEVELS} Fock levels "
                f"of a {self.cavity_dim}-level cavity (limit {limit:g})"
            )

    def partial_trace_transmon(self, rho: np.ndarray) -> np.ndarray:
        """Reduced cavity density matrix (traces out the transmon)."""
        r = rho.reshape(self.transmon_dim, self.cavity_dim, self.transmon_dim, self.cavity_dim)
        return np.einsum("qiqj->ij", r)

    def partial_trace_cavity(self, rho: np.ndarray) -> np.ndarray:
        """Reduced transmon density matrix (traces out the cavity)."""
        r = rho.reshape(self.transmon_dim, self.cavity_dim, self.transmon_dim, self.cavity_dim)
        return np.einsum("injn->ij", r)


def make_space(transmon_dim: int = 2, cavity_dim: int = 30) -> SpaceDescriptor:
    return SpaceDescriptor(int(transmon_dim), int(cavity_dim))


def build_static_hamiltonian(space: SpaceDescriptor, chi: float) -> np.ndarray:
    """Dispersive term ``chi a^dag a |e><e|``; ``chi`` in rad/s."""
    if not np.isfinite(chi):
        raise ValueError("chi must be finite")
    return chi * space.proj_e @ space.n_cavity


def control_generators(space: SpaceDescriptor) -> np.ndarray:
    """Stack of the four drive operators, shape ``(4, dim, dim)``.

    Order: transmon I, transmon Q, cavity I, cavity Q.
    """
    a = space.a
    return np.stack(
        [
            space.sigma_x / 2,
            space.sigma_y / 2,
            (a + dag(a)) / 2,
            (a - dag(a)) / 2j,
        ]
    )


CONTROL_NAMES = ("transmon_I", "transmon_Q", "cavity_I", "cavity_Q")
