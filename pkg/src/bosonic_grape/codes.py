"""Bosonic codes, logical target gates and evaluation states."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hilbert import SpaceDescriptor, destroy

#: Minimum number of Fock levels kept above the highest codeword level.
FOCK_HEADROOM = 10
#: Default four-leg cat amplitude.
CAT4_ALPHA = np.sqrt(3.0)


class CodeName(str, enum.Enum):
    BIN11 = "Bin11"
    BIN22 = "Bin22"
    CAT4 = "Cat4"


class GateKind(str, enum.Enum):
    X = "X"
    Z = "Z"
    HADAMARD = "Hadamard"
    IDENTITY = "Identity"
    RECOVERY = "Recovery"
    PHASE = "PhaseGate"


@dataclass(frozen=True)
class BosonicCode:
    name: CodeName
    zero_L: np.ndarray
    one_L: np.ndarray
    zero_E: np.ndarray
    one_E: np.ndarray
    mean_photon: float
    alpha: complex | None = None

    @property
    def cavity_dim(self) -> int:
        return self.zero_L.shape[0]

    @property
    def codewords(self) -> np.ndarray:
        return np.stack([self.zero_L, self.one_L])

    @property
    def error_words(self) -> np.ndarray:
        return np.stack([self.zero_E, self.one_E])


def _normalized(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _fock_superposition(dim: int, amps: dict[int, float]) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    for n, c in amps.items():
        v[n] = c
    return v


def coherent(dim: int, alpha: complex) -> np.ndarray:
    """Fock-basis coefficients of ``|alpha>`` truncated to ``dim`` levels (not renormalized)."""
    n = np.arange(dim)
    if alpha == 0:
        return (n == 0).astype(complex)
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def error_words(zero_L: np.ndarray, one_L: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized images of the codewords under a single photon loss."""
    a = destroy(zero_L.shape[0])
    return _normalized(a @ zero_L), _normalized(a @ one_L)


def build_code(name: str | CodeName, cavity_dim: int = 30, alpha: complex | None = None) -> BosonicCode:
    """Construct codewords, error words and mean photon number on ``cavity_dim`` levels.

    ``alpha`` is only used by the four-leg cat code and defaults to ``sqrt(3)``.
    """
    name = CodeName(name)
    dim = int(cavity_dim)
    if name is CodeName.BIN11:
        top = 4
        zero = _fock_superposition(dim, {0: 1 / np.sqrt(2), 4: 1 / np.sqrt(2)}) if dim > top else None
        one = _fock_superposition(dim, {2: 1.0}) if dim > top else None
    elif name is CodeName.BIN22:
        top = 9
        zero = _fock_superposition(dim, {0: 0.5, 6: np.sqrt(3) / 2}) if dim > top else None
        one = _fock_superposition(dim, {3: np.sqrt(3) / 2, 9: 0.5}) if dim > top else None
    else:
        alpha = complex(CAT4_ALPHA if alpha is None else alpha)
        if abs(alpha) ** 2 > dim / 3:
            raise ValueError(
                f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds cavity_dim/3 = {dim / 3:.3g}; "
                "increase the cavity truncation"
            )
        legs = [coherent(dim, alpha * ph) for ph in (1, -1, 1j, -1j)]
        zero = _normalized(legs[0] + legs[1] + legs[2] + legs[3])
        one = _normalized(legs[0] + legs[1] - legs[2] - legs[3])
        top = None
    if top is not None and dim < top + 1 + FOCK_HEADROOM:
        raise ValueError(
            f"{name.value} needs cavity_dim >= {top + 1 + FOCK_HEADROOM} "
            f"(highest codeword level {top} plus {FOCK_HEADROOM} headroom), got {dim}"
        )
    zero_E, one_E = error_words(zero, one)
    # codespace average; equals the per-codeword value for the binomial codes
    n_op = np.arange(dim)
    mean_photon = float(np.mean([np.real(np.vdot(w, n_op * w)) for w in (zero, one)]))
    return BosonicCode(
        name=name,
        zero_L=zero,
        one_L=one,
        zero_E=zero_E,
        one_E=one_E,
        mean_photon=mean_photon,
        alpha=alpha if name is CodeName.CAT4 else None,
    )


@dataclass(frozen=True)
class LogicalGate:
    """Target action of a gate on a two-dimensional support.

    ``inputs[i]`` is mapped to ``outputs[i]``; both are full-space vectors
    with the transmon in ``|g>``.  ``target_unitary`` is the embedding
    ``1_t (x) sum_i |out_i><in_i|`` (a partial isometry for the recovery gate).
    """

    kind: GateKind
    target_unitary: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    angle: float | None = None

    @property
    def input_projector(self) -> np.ndarray:
        return np.einsum("ki,kj->ij", self.inputs, self.inputs.conj())

    @property
    def output_projector(self) -> np.ndarray:
        return np.einsum("ki,kj->ij", self.outputs, self.outputs.conj())


def logical_matrix(kind: str | GateKind, angle: float | None = None) -> np.ndarray:
    """2x2 matrix of the logical operation in the ``{|0_L>, |1_L>}`` basis."""
    kind = GateKind(kind)
    if kind is GateKind.X:
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind is GateKind.Z:
        return np.diag([1, -1]).astype(complex)
    if kind is GateKind.HADAMARD:
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if kind is GateKind.PHASE:
        if angle is None:
            raise ValueError("PhaseGate requires an angle")
        return np.diag([1, np.exp(1j * angle)])
    return np.eye(2, dtype=complex)


def logical_unitary(
    code: BosonicCode,
    kind: str | GateKind,
    space: SpaceDescriptor | None = None,
    angle: float | None = None,
) -> LogicalGate:
    kind = GateKind(kind)
    space = space or SpaceDescriptor(2, code.cavity_dim)
    if space.cavity_dim != code.cavity_dim:
        raise ValueError("code and space use different cavity truncations")
    cw = code.codewords
    if kind is GateKind.RECOVERY:
        src, m = code.error_words, np.eye(2, dtype=complex)
    else:
        src, m = cw, logical_matrix(kind, angle)
    # cavity operator sum_ij m_ij |dst_i><src_j| with dst = codewords
    cav_op = cw.T @ m @ src.conj()
    target = np.kron(space.id_transmon, cav_op)
    inputs = np.stack([space.product_state(0, v) for v in src])
    outputs = inputs @ target.T
    return LogicalGate(kind, target, inputs, outputs, angle if kind is GateKind.PHASE else None)


def codespace_projector(code: BosonicCode, space: SpaceDescriptor) -> np.ndarray:
    """``|g><g| (x) (|0_L><0_L| + |1_L><1_L|)``."""
    cav = np.einsum("ki,kj->ij", code.codewords, code.codewords.conj())
    return np.kron(space.proj_g_t, cav)


def cardinal_coefficients() -> np.ndarray:
    """Six Bloch-sphere points as coefficient pairs on ``(|0>, |1>)``."""
    s = 1 / np.sqrt(2)
    return np.array(
        [[1, 0], [0, 1], [s, s], [s, -s], [s, 1j * s], [s, -1j * s]],
        dtype=complex,
    )


def cardinal_states(code: BosonicCode, space: SpaceDescriptor | None = None, words: str = "logical") -> np.ndarray:
    """The six cardinal states tensored with ``|g>``, shape ``(6, dim)``.

    ``words="error"`` builds them from the error words instead (inputs of
    the recovery gate).
    """
    space = space or SpaceDescriptor(2, code.cavity_dim)
    basis = code.codewords if words == "logical" else code.error_words
    cav = cardinal_coefficients() @ basis
    return np.stack([space.product_state(0, c) for c in cav])


def evaluation_states(gate: LogicalGate) -> np.ndarray:
    """Cardinal states built on the gate's input support."""
    return cardinal_coefficients() @ gate.inputs

