"""State diagnostics: fidelity, Wigner function, entanglement entropy."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .hilbert import LEAKAGE_LEVELS, SpaceDescriptor


class MatrixSqrtError(ArithmeticError):
    pass


def _psd_factor(rho: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """``A`` with ``rho = A A^dag``; eigenvalues below numerical rank are dropped."""
    herm = (rho + rho.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    if w.min() < -tol:
        raise MatrixSqrtError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3g})")
    keep = w > len(w) * np.finfo(float).eps * max(w.max(), 0.0)
    return v[:, keep] * np.sqrt(w[keep])


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Either argument may be a state vector; pure inputs take the overlap
    shortcut.  Mixed pairs use the equivalent nuclear norm
    ``||B^dag A||_***2`` of factors ``rho = A A^dag``, ``sigma = B B^dag``,
    which is symmetric and avoids square roots of rounding noise.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape[0] != sigma.shape[0]:
        raise ValueError("dimension mismatch")
    if rho.ndim == 1 and sigma.ndim == 1:
        return float(abs(np.vdot(rho, sigma)) ** 2)
    if rho.ndim == 1:
        return float(np.real(np.vdot(rho, sigma @ rho)))
    if sigma.ndim == 1:
        return float(np.real(np.vdot(sigma, rho @ sigma)))
    a = _psd_factor(rho)
    b = _psd_factor(sigma)
    f = float(np.sum(np.linalg.svd(b.conj().T @ a, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def _wigner_element_tables(dim: int, alpha: np.ndarray):
    """Wigner functions of ``|m><n|`` for ``m >= n`` on the points ``alpha``.

    ``(2/pi) (-1)^n sqrt(n!/m!) (2 conj(alpha))^(m-n) exp(-2|alpha|^2) L_n^(m-n)(4|alpha|^2)``
    """
    r2 = 4.0 * np.abs(alpha) ** 2
    gauss = (2.0 / np.pi) * np.exp(-2.0 * np.abs(alpha) ** 2)
    table = {}
    for n in range(dim):
        for m in range(n, dim):
            k = m - n
            log_pref = 0.5 * (gammaln(n + 1) - gammaln(m + 1))
            table[m, n] = (
                (-1) ** n
                * np.exp(log_pref)
                * (2.0 * np.conj(alpha)) ** k
                * gauss
                * eval_genlaguerre(n, k, r2)
            )
    return table


def wigner_grid(rho: np.ndarray, xs, ps, warn_levels: int = LEAKAGE_LEVELS) -> np.ndarray:
    """Wigner function ``W(x + i p)`` of a cavity density matrix or state vector.

    Normalized so that ``W(0) = 2/pi`` for the vacuum and the integral over
    ``dx dp`` is one.  Returns an array of shape ``(len(ps), len(xs))``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    dim = rho.shape[0]
    pops = np.real(np.diag(rho))
    if pops[-warn_levels:].sum() >= 0.01 * max(pops.sum(), 1e-300):
        warnings.warn(
            "at least 1% of the population is in the top Fock levels; "
            "the Wigner function may be unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    alpha = xs[None, :] + 1j * ps[:, None]
    table = _wigner_element_tables(dim, alpha)
    w = np.zeros(alpha.shape, dtype=complex)
    for (m, n), wmn in table.items():
        # rho = sum rho_mn |m><n| and W(|n><m|) = conj(W(|m><n|))
        w += rho[m, n] * wmn
        if m != n:
            w += rho[n, m] * np.conj(wmn)
    return np.real(w)


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-15]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def entanglement_entropy(state: np.ndarray, space: SpaceDescriptor) -> float:
    """Base-2 entropy of the reduced transmon state of a pure joint state."""
    psi = np.asarray(state, dtype=complex).reshape(space.transmon_dim, space.cavity_dim)
    # Schmidt coefficients
    s = np.linalg.svd(psi, compute_uv=False) ** 2
    s = s / s.sum()
    s = s[s > 1e-15]
    return float(max(0.0, -np.sum(s * np.log2(s))))
