"""Input checks shared by the estimators and the functional API."""
from __future__ import annotations

import numpy as np

__all__ = [
    "NumericalError", "check_square", "check_hermitian", "check_density_matrix",
    "clip_to_density_matrix", "is_hermitian", "check_state_batch",
]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


class NumericalError(RuntimeError):
    """A numerical result violates an invariant beyond its tolerance."""


def check_square(A, n: int | None = None, name: str = "operator") -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    if n is not None and A.shape[0] != n:
        raise ValueError(f"{name} has dimension {A.shape[0]}, expected {n}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def is_hermitian(A: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) < tol)


def check_hermitian(A, tol: float = 1e-10, name: str = "operator") -> np.ndarray:
    A = check_square(A, name=name)
    dev = float(np.max(np.abs(A - A.conj().T), initial=0.0))
    if dev >= tol:
        raise ValueError(f"{name} is not Hermitian: max |A - A^dag| = {dev:.3g}")
    return A


def check_density_matrix(rho, n: int | None = None, *, hermitian_tol: float = HERMITIAN_TOL,
                         trace_tol: float = TRACE_TOL, psd_tol: float = PSD_TOL,
                         name: str = "density matrix") -> np.ndarray:
    """Validate ``rho`` as a density matrix and return it as a complex array.

    Raises
    ------
    ValueError
        If ``rho`` is not square, not Hermitian, not unit trace or has an
        eigenvalue below ``-psd_tol``.
    """
    rho = check_square(rho, n, name=name)
    dev = float(np.max(np.abs(rho - rho.conj().T)))
    if dev >= hermitian_tol:
        raise ValueError(f"{name} is not Hermitian: max |rho - rho^dag| = {dev:.3g}")
    tr = np.trace(rho)
    if abs(tr - 1) >= trace_tol:
        raise ValueError(f"{name} does not have unit trace: Tr = {tr:.15g}")
    lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if lo <= -psd_tol:
        raise ValueError(f"{name} is not positive semidefinite: min eigenvalue {lo:.3g}")
    return rho


def clip_to_density_matrix(rho: np.ndarray, psd_tol: float = 1e-8) -> np.ndarray:
    """Nearby unit-trace state after clipping rounding-level negative eigenvalues.

    Violations larger than ``psd_tol`` are not rounding and raise
    :class:`NumericalError`.
    """
    rho = 0.5 * (rho + rho.conj().T)
    w, V = np.linalg.eigh(rho)
    if w[0] < -psd_tol:
        raise NumericalError(
            f"result is not positive semidefinite: min eigenvalue {w[0]:.3g} "
            f"(tolerance {psd_tol:g}); check the null-space tolerance or Fock truncation")
    if w[0] < 0:
        tr = np.trace(rho).real
        w = np.clip(w, 0.0, None)
        rho = (V * w) @ V.conj().T
        rho *= tr / np.trace(rho).real
    return rho


def check_state_batch(X, n: int):
    """Normalize one state or a batch to shape ``(B, n, n)``.

    Accepts ``(n, n)``, ``(B, n, n)`` and row-stacked ``(B, n*n)``. Returns
    the batch and a function mapping a ``(B, n, n)`` result back to the input
    layout.
    """
    X = np.asarray(X, dtype=complex)
    if X.ndim == 2 and X.shape == (n, n):
        return X[None], lambda out: out[0]
    if X.ndim == 3 and X.shape[1:] == (n, n):
        return X, lambda out: out
    if X.ndim == 2 and X.shape[1] == n * n:
        return X.reshape(-1, n, n), lambda out: out.reshape(out.shape[0], n * n)
    raise ValueError(f"expected states of shape ({n}, {n}), (B, {n}, {n}) or (B, {n * n}), "
                     f"got {X.shape}")
