"""
Lindblad generator as a superoperator matrix, its adjoint, and its spectrum.

Convention: jump operators carry their rates, and the dissipator has a
prefactor of 2,

    L(rho) = -i[H, rho] + sum_l 2 F rho F^dag - F^dag F rho - rho F^dag F.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .operator_core import HilbertSpace, devectorize, vectorize
from .validation import NumericalError, check_square

__all__ = [
    "Model", "Liouvillian", "Spectrum", "build_liouvillian", "build_adjoint",
    "apply", "adjoint_apply", "lindblad_rhs", "heisenberg_rhs", "spectrum",
    "dissipation_gap", "default_zero_tol",
]


def _frozen(A) -> np.ndarray:
    A = np.array(A, dtype=complex)
    A.flags.writeable = False
    return A


@dataclass(frozen=True, eq=False)
class Model:
    """Hamiltonian plus jump operators on a declared Hilbert space.

    Parameters
    ----------
    space : HilbertSpace
    hamiltonian : array_like or None
        Hermitian ``N x N`` matrix (``hbar = 1``). ``None`` means ``H = 0``.
    jumps : sequence of array_like
        Jump operators with their rates already folded in.
    name : str
    """

    space: HilbertSpace
    hamiltonian: np.ndarray | None = None
    jumps: Sequence[np.ndarray] = ()
    name: str = "model"
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.space.dim
        H = np.zeros((n, n)) if self.hamiltonian is None else self.hamiltonian
        H = check_square(H, n, name="hamiltonian")
        dev = float(np.max(np.abs(H - H.conj().T)))
        if dev >= 1e-10:
            raise ValueError(f"hamiltonian is not Hermitian: max |H - H^dag| = {dev:.3g}")
        object.__setattr__(self, "hamiltonian", _frozen(H))
        jumps = tuple(_frozen(check_square(F, n, name=f"jump operator {i}"))
                      for i, F in enumerate(self.jumps))
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.space.dim


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Superoperator of a :class:`Model`; the dense matrix is built on first use."""

    model: Model

    @property
    def dim(self) -> int:
        return self.model.dim

    @cached_property
    def matrix(self) -> np.ndarray:
        H = self.model.hamiltonian
        n = self.dim
        eye = np.eye(n)
        Lm = -1j * (np.kron(H, eye) - np.kron(eye, H.conj()))
        for F in self.model.jumps:
            FdF = F.conj().T @ F
            Lm += 2 * np.kron(F, F.conj()) - np.kron(FdF, eye) - np.kron(eye, FdF.conj())
        Lm.flags.writeable = False
        return Lm

    @cached_property
    def adjoint_matrix(self) -> np.ndarray:
        A = build_adjoint(self.model)
        A.flags.writeable = False
        return A

    @cached_property
    def scale(self) -> float:
        return float(np.max(np.abs(self.matrix), initial=0.0))

    def zero_tol(self, tol: float = 1e-9) -> float:
        """Absolute threshold for calling an eigenvalue zero."""
        return default_zero_tol(self, tol)


def default_zero_tol(L: Liouvillian, tol: float = 1e-9) -> float:
    return tol * max(1.0, L.scale)


def _check_spaces(model: Model):
    n = model.dim
    for i, F in enumerate(model.jumps):
        if F.shape != (n, n):
            raise ValueError(f"jump operator {i} has shape {F.shape}, space has dim {n}")


def build_liouvillian(model: Model) -> Liouvillian:
    _check_spaces(model)
    return Liouvillian(model)


def build_adjoint(model: Model) -> np.ndarray:
    """Matrix of the Heisenberg-picture generator ``L^dag``.

    Built from ``L^dag(J) = i[H, J] + sum 2 F^dag J F - F^dag F J - J F^dag F``
    rather than by transposing the Schrodinger-picture matrix, so the two can
    be checked against each other.
    """
    _check_spaces(model)
    H = model.hamiltonian
    n = model.dim
    eye = np.eye(n)
    A = 1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for F in model.jumps:
        Fd = F.conj().T
        FdF = Fd @ F
        A += 2 * np.kron(Fd, F.T) - np.kron(FdF, eye) - np.kron(eye, FdF.T)
    return A


def lindblad_rhs(model: Model, rho: np.ndarray) -> np.ndarray:
    """Evaluate ``L(rho)`` with operator products, no superoperator needed."""
    H = model.hamiltonian
    out = -1j * (H @ rho - rho @ H)
    for F in model.jumps:
        Fd = F.conj().T
        FdF = Fd @ F
        out += 2 * F @ rho @ Fd - FdF @ rho - rho @ FdF
    return out


def heisenberg_rhs(model: Model, X: np.ndarray) -> np.ndarray:
    """Evaluate ``L^dag(X)`` with operator products."""
    H = model.hamiltonian
    out = 1j * (H @ X - X @ H)
    for F in model.jumps:
        Fd = F.conj().T
        FdF = Fd @ F
        out += 2 * Fd @ X @ F - FdF @ X - X @ FdF
    return out


def apply(L: Liouvillian, rho: np.ndarray) -> np.ndarray:
    rho = check_square(rho, L.dim, name="rho")
    return devectorize(L.matrix @ vectorize(rho), L.dim)


def adjoint_apply(L: Liouvillian, X: np.ndarray) -> np.ndarray:
    X = check_square(X, L.dim, name="X")
    return heisenberg_rhs(L.model, X)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigen-decomposition of a Liouvillian.

    ``right[:, k]`` and ``left[:, k]`` are unit-norm vectors with
    ``L @ right[:, k] = eigenvalues[k] * right[:, k]`` and
    ``L^dag @ left[:, k] = conj(eigenvalues[k]) * left[:, k]``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    gap: float
    tol_real: float


def _sort_order(vals: np.ndarray, tol: float) -> np.ndarray:
    # quantize so that rounding noise does not reorder (near-)equal real parts
    q = max(tol, 1e-300)
    re = np.round(vals.real / q) * q
    im = np.round(vals.imag / q) * q
    return np.lexsort((im, -re))


def spectrum(L: Liouvillian, tol_real: float | None = None, vectors: bool = True) -> Spectrum:
    """Full non-Hermitian eigendecomposition of ``L``.

    Eigenvalues are sorted by real part (descending), then imaginary part
    (ascending). Left eigenvectors come from LAPACK's independent left
    eigenvector computation, i.e. they are eigenvectors of the adjoint matrix,
    not rows of an inverted right-eigenvector matrix.

    Raises
    ------
    NumericalError
        If the eigensolver fails or returns non-finite values.
    """
    if tol_real is None:
        tol_real = L.zero_tol()
    try:
        if vectors:
            vals, vl, vr = la.eig(L.matrix, left=True, right=True)
        else:
            vals = la.eigvals(L.matrix)
            vl = vr = np.empty((L.matrix.shape[0], 0), dtype=complex)
    except la.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(vals)) or not (np.all(np.isfinite(vr)) and np.all(np.isfinite(vl))):
        raise NumericalError("eigensolver returned non-finite values")
    order = _sort_order(vals, tol_real)
    vals = vals[order]
    if vectors:
        vr = vr[:, order]
        vl = vl[:, order]
    gap = _gap(vals, tol_real)
    return Spectrum(eigenvalues=vals, right=vr, left=vl, gap=gap, tol_real=tol_real)


def _gap(vals: np.ndarray, tol_real: float) -> float:
    decaying = vals.real[vals.real < -tol_real]
    if decaying.size == 0:
        return float("inf")
    return float(np.min(np.abs(decaying)))


def dissipation_gap(s: Spectrum | np.ndarray, tol_real: float | None = None) -> float:
    """Smallest decay rate ``min |Re lambda|`` over eigenvalues with ``Re lambda < -tol_real``.

    Returns ``inf`` when nothing decays (purely unitary dynamics).
    """
    if isinstance(s, Spectrum):
        return _gap(s.eigenvalues, s.tol_real if tol_real is None else tol_real)
    if tol_real is None:
        raise ValueError("tol_real is required when passing raw eigenvalues")
    return _gap(np.asarray(s), tol_real)
