"""Covariance-matrix toolkit for Gaussian states.

States are plain ``numpy`` arrays of shape ``(2N, 2N)`` in the interleaved
quadrature ordering ``(x1, p1, x2, p2, ...)`` and shot-noise units, so the
vacuum is the identity. No first moments are carried: every quantity used
downstream depends on second moments only.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence, Union

import numpy as np

SYMMETRY_TOL = 1e-12
PHYSICAL_TOL = 1e-9
G_CUTOFF = 1e-12

MODE_NAMES = ("A", "B", "C", "E1", "E2", "F", "G")

Modes = Union[int, Sequence[int]]


class DomainError(ValueError):
    """Raised when an operation is called outside its physical domain."""


class DegenerateMeasurementError(DomainError):
    """Raised when a homodyne measurement has zero variance to condition on."""


def n_modes(cm: np.ndarray) -> int:
    return cm.shape[0] // 2


def _check_cm(cm: np.ndarray) -> np.ndarray:
    cm = np.asarray(cm, dtype=float)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] % 2:
        raise DomainError(f"covariance matrix must be 2N x 2N, got {cm.shape}")
    scale = max(1.0, float(np.abs(cm).max()))
    if float(np.abs(cm - cm.T).max()) > SYMMETRY_TOL * scale:
        raise DomainError("covariance matrix is not symmetric")
    return cm


def _check_mode(cm: np.ndarray, mode: int) -> None:
    if not 0 <= mode < n_modes(cm):
        raise DomainError(f"mode {mode} out of range for {n_modes(cm)}-mode state")


@lru_cache(maxsize=16)
def _omega(n: int) -> np.ndarray:
    out = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    out.flags.writeable = False
    return out


def symplectic_form(n: int) -> np.ndarray:
    return _omega(n).copy()


# --- sources -----------------------------------------------------------------


def vacuum(n: int = 1) -> np.ndarray:
    return np.eye(2 * n)


def thermal(variance: float) -> np.ndarray:
    """Single-mode thermal state with equal quadrature variances."""
    if variance < 1.0 - PHYSICAL_TOL:
        raise DomainError(f"thermal variance must be >= 1, got {variance}")
    return variance * np.eye(2)


def epr_source(variance: float) -> np.ndarray:
    """Two-mode squeezed vacuum with local (marginal) variance ``variance``.

    The cross block is ``sqrt(V^2 - 1) * diag(1, -1)``, which makes the state
    pure for every ``V >= 1``.
    """
    if variance < 1.0:
        raise DomainError(f"EPR variance must be >= 1, got {variance}")
    c = np.sqrt(variance * variance - 1.0)
    out = variance * np.eye(4)
    out[0, 2] = out[2, 0] = c
    out[1, 3] = out[3, 1] = -c
    return out


def compose(states: Sequence[np.ndarray]) -> np.ndarray:
    """Direct sum of uncorrelated subsystems, modes kept in input order."""
    states = [_check_cm(s) for s in states]
    size = sum(s.shape[0] for s in states)
    out = np.zeros((size, size))
    k = 0
    for s in states:
        d = s.shape[0]
        out[k : k + d, k : k + d] = s
        k += d
    return out


# --- channels and couplers ---------------------------------------------------


def beam_splitter(cm: np.ndarray, i: int, j: int, transmittance: float) -> np.ndarray:
    """Mix modes ``i`` and ``j`` on a beam splitter.

    ``x_i -> sqrt(T) x_i + sqrt(1-T) x_j`` and
    ``x_j -> -sqrt(1-T) x_i + sqrt(T) x_j``, identically for ``p``.
    """
    cm = _check_cm(cm)
    if i == j:
        raise DomainError("beam splitter needs two distinct modes")
    _check_mode(cm, i)
    _check_mode(cm, j)
    if not 0.0 <= transmittance <= 1.0:
        raise DomainError(f"transmittance must lie in [0, 1], got {transmittance}")
    t = np.sqrt(transmittance)
    r = np.sqrt(1.0 - transmittance)
    s = np.eye(cm.shape[0])
    for q in (0, 1):
        a, b = 2 * i + q, 2 * j + q
        s[a, a], s[a, b] = t, r
        s[b, a], s[b, b] = -r, t
    return s @ cm @ s.T


def loss_channel(cm: np.ndarray, mode: int, eta: float, eps: float = 0.0) -> np.ndarray:
    """Thermal-loss channel of transmittivity ``eta`` and excess noise ``eps``.

    The output variance of a mode with input ``V`` is ``eta*V + 1 - eta + eta*eps``;
    correlations with other modes shrink by ``sqrt(eta)``.
    """
    cm = _check_cm(cm)
    _check_mode(cm, mode)
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"channel transmittivity must lie in (0, 1], got {eta}")
    if eps < 0.0:
        raise DomainError(f"excess noise must be >= 0, got {eps}")
    k = slice(2 * mode, 2 * mode + 2)
    out = cm.copy()
    out[k, :] *= np.sqrt(eta)
    out[:, k] *= np.sqrt(eta)
    out[k, k] += (1.0 - eta + eta * eps) * np.eye(2)
    return out


def add_phase_insensitive_noise(cm: np.ndarray, mode: int, noise: float) -> np.ndarray:
    cm = _check_cm(cm)
    _check_mode(cm, mode)
    if noise < 0.0:
        raise DomainError(f"added noise must be >= 0, got {noise}")
    out = cm.copy()
    out[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2] += noise * np.eye(2)
    return out


def reduce_state(cm: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    """Marginal covariance matrix of ``modes`` (in the given order)."""
    cm = _check_cm(cm)
    idx = np.array([[2 * m, 2 * m + 1] for m in modes], dtype=int).ravel()
    return cm[np.ix_(idx, idx)]


# --- spectra and entropies ---------------------------------------------------


def symplectic_eigenvalues(cm: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues in descending order, one per mode.

    These are the moduli of the eigenvalues of ``i * Omega @ cm``. With
    ``cm = L L^T`` the same spectrum belongs to the Hermitian matrix
    ``i L^T Omega L``, whose eigensolver stays accurate for strongly squeezed
    states where the non-normal ``Omega @ cm`` does not.
    """
    cm = _check_cm(cm)
    n = n_modes(cm)
    if n == 1:
        return np.array([np.sqrt(max(np.linalg.det(cm), 0.0))])
    omega = _omega(n)
    try:
        low = np.linalg.cholesky(cm)
        ev = np.abs(np.linalg.eigvalsh(1j * (low.T @ omega @ low)))
    except np.linalg.LinAlgError:
        # not positive definite, hence unphysical; report the spectrum anyway
        ev = np.abs(np.linalg.eigvals(omega @ cm).imag)
    ev = np.sort(ev)[::-1]
    # pairs are equal up to roundoff; average them
    return 0.5 * (ev[0::2] + ev[1::2])


def g_function(x):
    """Thermal-state entropy kernel ``(x+1)log2(x+1) - x log2(x)`` in bits."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > G_CUTOFF
    xm = x[m]
    out[m] = (xm + 1.0) * np.log2(xm + 1.0) - xm * np.log2(xm)
    return out if out.ndim else float(out)


def entropy_from_spectrum(nu) -> float:
    nu = np.maximum(np.asarray(nu, dtype=float), 1.0)
    return float(np.sum(g_function((nu - 1.0) / 2.0)))


def von_neumann_entropy(cm: np.ndarray) -> float:
    """Von Neumann entropy (bits) of a Gaussian state."""
    return entropy_from_spectrum(symplectic_eigenvalues(cm))


def is_physical(cm: np.ndarray, tol: float = PHYSICAL_TOL) -> bool:
    return bool(np.min(symplectic_eigenvalues(cm)) >= 1.0 - tol)


# --- measurements ------------------------------------------------------------


def _as_modes(modes: Modes) -> list[int]:
    return [int(modes)] if np.isscalar(modes) else [int(m) for m in modes]


def homodyne_condition(cm: np.ndarray, measured: Modes, quadrature: str = "x") -> np.ndarray:
    """Covariance of the remaining modes after perfect homodyne detection.

    ``measured`` may be a single mode or several modes, all measured in the
    same quadrature. Implements ``gamma_rest - sigma (X gamma_m X)^MP sigma^T``
    where the Moore-Penrose inverse of the projected block is just the inverse
    of its measured-quadrature sub-block padded with zeros.
    """
    cm = _check_cm(cm)
    mm = _as_modes(measured)
    for m in mm:
        _check_mode(cm, m)
    if quadrature not in ("x", "p"):
        raise DomainError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    rest = [k for k in range(n_modes(cm)) if k not in mm]
    if not rest:
        raise DomainError("homodyne conditioning needs at least one unmeasured mode")
    q = 0 if quadrature == "x" else 1
    meas_idx = [2 * m + q for m in mm]
    rest_idx = np.array([[2 * k, 2 * k + 1] for k in rest], dtype=int).ravel()
    block = cm[np.ix_(meas_idx, meas_idx)]
    if np.min(np.linalg.eigvalsh(block)) <= 0.0:
        raise DegenerateMeasurementError("measured quadrature has zero variance")
    sigma = cm[np.ix_(rest_idx, meas_idx)]
    return cm[np.ix_(rest_idx, rest_idx)] - sigma @ np.linalg.solve(block, sigma.T)


def heterodyne_condition(cm: np.ndarray, measured: int) -> np.ndarray:
    """Covariance of the remaining modes after heterodyne (double homodyne) of one mode."""
    cm = _check_cm(cm)
    _check_mode(cm, measured)
    rest = [k for k in range(n_modes(cm)) if k != measured]
    rest_idx = np.array([[2 * k, 2 * k + 1] for k in rest], dtype=int).ravel()
    m_idx = [2 * measured, 2 * measured + 1]
    sigma = cm[np.ix_(rest_idx, m_idx)]
    block = cm[np.ix_(m_idx, m_idx)] + np.eye(2)
    return cm[np.ix_(rest_idx, rest_idx)] - sigma @ np.linalg.solve(block, sigma.T)


def conditional_variance(cm: np.ndarray, target: int, measured: Modes, quadrature: str = "x") -> float:
    """``V_t - C^2 / V_m`` for the chosen quadrature (Schur complement form)."""
    cm = _check_cm(cm)
    _check_mode(cm, target)
    mm = _as_modes(measured)
    if target in mm:
        raise DomainError("target mode cannot also be measured")
    q = 0 if quadrature == "x" else 1
    if quadrature not in ("x", "p"):
        raise DomainError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    meas_idx = [2 * m + q for m in mm]
    block = cm[np.ix_(meas_idx, meas_idx)]
    if np.min(np.linalg.eigvalsh(block)) <= 0.0:
        raise DegenerateMeasurementError("measured quadrature has zero variance")
    c = cm[2 * target + q, meas_idx]
    return float(cm[2 * target + q, 2 * target + q] - c @ np.linalg.solve(block, c))
