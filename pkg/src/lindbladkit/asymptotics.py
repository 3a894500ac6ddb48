"""
Steady states, conserved quantities and the infinite-time map.

The steady-state space is the right null space of the Liouvillian matrix and
the conserved quantities span the null space of its adjoint. Pairing the two
biorthogonally turns ``rho_in -> sum_mu Tr{J_mu^dag rho_in} M_mu`` into the
exact ``t -> infinity`` limit, with eigenvectors on the imaginary axis adding
the rotating part.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .liouvillian import Liouvillian, Spectrum, _gap, default_zero_tol
from .operator_core import (coords_to_hermitian, devectorize, hermitian_basis_coords,
                            vectorize)
from .validation import NumericalError, check_density_matrix, clip_to_density_matrix

__all__ = [
    "RotatingMode", "AsymptoticDecomposition", "steady_basis", "conserved_quantities",
    "biorthogonalize", "decompose", "asymptotic_project", "coefficients",
    "rotating_decomposition", "infinite_time_state", "null_space",
    "biorthogonal_duals", "canonical_real_basis",
]

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
PSD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RotatingMode:
    """Oscillating coherence ``O`` with ``L(O) = i*frequency*O`` and its dual ``S``."""

    frequency: float
    O: np.ndarray
    S: np.ndarray


@dataclass(frozen=True, eq=False)
class AsymptoticDecomposition:
    """Everything needed to evaluate the infinite-time state of any input.

    Attributes
    ----------
    steady : tuple of ndarray
        Orthonormal (Hilbert-Schmidt) Hermitian basis ``M_mu`` of the
        steady-state space.
    conserved : tuple of ndarray
        Conserved quantities ``J_mu`` with ``Tr{J_mu^dag M_nu} = delta``.
    rotating : tuple of RotatingMode
    gap : float
        Dissipation gap; ``inf`` if nothing decays, ``nan`` if not computed.
    tol_zero : float
        Absolute eigenvalue threshold used to classify the imaginary axis.
    singular_values : ndarray
        Singular value profile of the Liouvillian matrix (descending).
    """

    steady: tuple
    conserved: tuple
    rotating: tuple = ()
    gap: float = float("nan")
    tol_zero: float = 0.0
    singular_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def dim(self) -> int:
        return len(self.steady)

    @property
    def n(self) -> int:
        return self.steady[0].shape[0]


def null_space(A: np.ndarray, tol: float = DEFAULT_TOL):
    """Right and left null spaces of ``A`` from one SVD.

    A singular value counts as zero when it is below ``tol * sigma_max``
    (or below ``tol`` when ``A`` is identically zero).

    Returns
    -------
    right, left : ndarray
        Orthonormal columns spanning ``ker A`` and ``ker A^dag``.
    s : ndarray
        All singular values, descending.
    """
    try:
        U, s, Vh = la.svd(A)
    except la.LinAlgError:
        U, s, Vh = la.svd(A, lapack_driver="gesvd")
    smax = s[0] if s.size else 0.0
    cut = tol * smax if smax > 0 else tol
    k = int(np.sum(s < cut))
    right = Vh[Vh.shape[0] - k:].conj().T
    left = U[:, U.shape[1] - k:]
    return right, left, s


def _span_residual(basis: np.ndarray, vecs: np.ndarray) -> float:
    # max distance of vecs (columns) from span(basis) (orthonormal columns)
    if vecs.size == 0:
        return 0.0
    r = vecs - basis @ (basis.conj().T @ vecs)
    return float(np.max(np.linalg.norm(r, axis=0)))


def _hermitian_basis(vecs: np.ndarray, n: int) -> list[np.ndarray]:
    """Deterministic orthonormal Hermitian basis of a dagger-closed subspace.

    ``vecs`` holds an orthonormal basis (columns, vectorized operators) of a
    complex subspace closed under ``A -> A^dag``. Its Hermitian elements form
    a real subspace of the same dimension; we pick basis elements greedily as
    projections of the standard Hermitian matrix units (column-pivoted QR), so
    the result does not depend on the rotation returned by the SVD.
    """
    D = vecs.shape[1]
    if D == 0:
        return []
    mats = [devectorize(v, n) for v in vecs.T]
    daggers = np.stack([vectorize(m.conj().T) for m in mats], axis=1)
    closure = _span_residual(vecs, daggers)
    if closure > 1e-9:
        logger.warning("null space not dagger-closed (residual %.3g); symmetrizing", closure)
    coords = []
    for m in mats:
        coords.append(hermitian_basis_coords(m))
        coords.append(hermitian_basis_coords(-1j * m))
    C = np.stack(coords, axis=1)
    Q, s, _ = la.svd(C, full_matrices=False)
    B = canonical_real_basis(Q[:, :D])
    out = [coords_to_hermitian(b, n) for b in B.T]
    return sorted(out, key=_order_key)


def canonical_real_basis(Q: np.ndarray) -> np.ndarray:
    """Rotation-independent orthonormal basis of ``span(Q)`` (real columns).

    Coordinate axes are projected onto the span and picked greedily by
    column-pivoted QR, then orthonormalized in pick order with the sign fixed
    by the picked axis.
    """
    D = Q.shape[1]
    if D == 0:
        return Q
    _, _, piv = la.qr(Q.T, pivoting=True, mode="economic")
    picks = piv[:D]
    B, _ = np.linalg.qr(Q @ Q[picks].T)
    signs = np.sign(B[picks, np.arange(D)])
    signs[signs == 0] = 1.0
    return B * signs


def _order_key(M: np.ndarray):
    diag_weight = float(np.sum(np.abs(np.diag(M)) ** 2))
    peak = int(np.argmax(np.round(np.abs(M).reshape(-1), 9)))
    return (-round(diag_weight, 9), peak)


def steady_basis(L: Liouvillian, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of the steady-state space ``ker L``."""
    right, _, s = null_space(L.matrix, tol)
    if right.shape[1] == 0:
        raise NumericalError(
            "no steady state found; smallest singular values "
            f"{np.array2string(s[-5:], precision=3)} relative to max {s[0]:.3g}")
    return _hermitian_basis(right, L.dim)


def conserved_quantities(L: Liouvillian, tol: float = DEFAULT_TOL,
                         steady: list | None = None) -> list[np.ndarray]:
    """Basis of ``ker L^dag`` (not yet paired with the steady basis)."""
    right, _, s = null_space(L.adjoint_matrix, tol)
    if steady is not None and right.shape[1] != len(steady):
        raise NumericalError(
            f"null space dimensions differ: L has {len(steady)}, L^dag has {right.shape[1]}; "
            f"singular values near the cut: {np.array2string(s[-max(len(steady), 1) - 2:], precision=3)}")
    J = _hermitian_basis(right, L.dim)
    _check_identity_in_span(J, L.dim)
    return J


def _check_identity_in_span(J, n):
    if not J:
        raise NumericalError("no conserved quantities found")
    basis = np.stack([vectorize(j) for j in J], axis=1)
    eye = vectorize(np.eye(n)) / np.sqrt(n)
    res = _span_residual(basis, eye[:, None])
    if res > 1e-6:
        raise NumericalError(f"identity is not conserved (residual {res:.3g}); tolerance too tight?")


def biorthogonalize(M: list, J_raw: list, cond_max: float = 1e12) -> list[np.ndarray]:
    """Recombine ``J_raw`` so that ``Tr{J_mu^dag M_nu} = delta_{mu nu}``.

    Raises
    ------
    NumericalError
        If the Gram matrix ``G[a, b] = Tr{J_raw[a]^dag M[b]}`` has condition
        number above ``cond_max``; this usually means a near-null vector was
        misclassified on one side.
    """
    if len(M) != len(J_raw):
        raise ValueError(f"need equally many steady elements and duals, got {len(M)} and {len(J_raw)}")
    if not M:
        return []
    Mv = np.stack([vectorize(m) for m in M], axis=1)
    Jv = np.stack([vectorize(j) for j in J_raw], axis=1)
    out = biorthogonal_duals(Mv, Jv, cond_max)
    n = M[0].shape[0]
    return [devectorize(v, n) for v in out.T]


def biorthogonal_duals(R: np.ndarray, Lraw: np.ndarray, cond_max: float = 1e12) -> np.ndarray:
    """Columns ``S`` spanning ``span(Lraw)`` with ``S^dag R = I``."""
    G = Lraw.conj().T @ R
    sv = la.svdvals(G)
    if sv[-1] == 0 or sv[0] / sv[-1] > cond_max:
        raise NumericalError(
            f"Gram matrix is singular (condition {sv[0] / max(sv[-1], 1e-300):.3g}); "
            f"singular values {np.array2string(sv, precision=3)}")
    return Lraw @ np.conj(la.inv(G)).T


def rotating_decomposition(L: Liouvillian, tol: float | None = None,
                           eigenvalues: np.ndarray | None = None) -> list[RotatingMode]:
    """Eigen-pairs of ``L`` on the imaginary axis away from zero.

    Frequencies within ``1e-7 * max|Im|`` of each other are treated as one
    degenerate cluster; each cluster's right null space of ``L - i w`` and the
    matching null space of ``L^dag + i w`` come from one SVD and are then
    biorthogonalized. ``tol`` is the absolute zero threshold (default
    :func:`default_zero_tol`).
    """
    if tol is None:
        tol = default_zero_tol(L)
    if eigenvalues is None:
        eigenvalues = la.eigvals(L.matrix)
    ev = np.asarray(eigenvalues)
    on_axis = ev[(np.abs(ev.real) < tol) & (np.abs(ev.imag) >= tol)]
    if on_axis.size == 0:
        return []
    freqs = np.sort(on_axis.imag)
    ctol = 1e-7 * np.max(np.abs(freqs))
    clusters = [[freqs[0]]]
    for f in freqs[1:]:
        if f - clusters[-1][-1] <= ctol:
            clusters[-1].append(f)
        else:
            clusters.append([f])
    n = L.dim
    eye = np.eye(n * n)
    modes = []
    for cl in clusters:
        w = float(np.mean(cl))
        k = len(cl)
        U, s, Vh = la.svd(L.matrix - 1j * w * eye)
        if s[-k] > tol:
            raise NumericalError(
                f"eigenvalue {w:+.6g}i is defective or unmatched: only "
                f"{int(np.sum(s < tol))} of {k} null vectors found")
        O = Vh[-k:].conj().T
        try:
            S = biorthogonal_duals(O, U[:, -k:])
        except NumericalError as exc:
            raise NumericalError(f"no adjoint partner for frequency {w:+.6g}: {exc}") from exc
        for j in range(k):
            modes.append(RotatingMode(w, devectorize(O[:, j], n), devectorize(S[:, j], n)))
    return modes


def decompose(L: Liouvillian, tol: float = DEFAULT_TOL, tol_zero: float | None = None,
              spectrum: Spectrum | None = None, rotating: bool = True,
              gap: bool = True) -> AsymptoticDecomposition:
    """Full asymptotic decomposition of ``L``.

    One SVD of the Liouvillian matrix gives both null spaces (the left
    singular vectors of ``L`` are the right singular vectors of ``L^dag``).
    The eigenvalues are computed only when the rotating part or the gap is
    requested and no ``spectrum`` is supplied.
    """
    if tol_zero is None:
        tol_zero = default_zero_tol(L)
    right, left, s = null_space(L.matrix, tol)
    if right.shape[1] == 0:
        raise NumericalError(
            f"no steady state found; smallest singular values {np.array2string(s[-5:], precision=3)}")
    n = L.dim
    M = _hermitian_basis(right, n)
    J_raw = _hermitian_basis(left, n)
    _check_identity_in_span(J_raw, n)
    J = biorthogonalize(M, J_raw)
    eigenvalues = None
    if spectrum is not None:
        eigenvalues = spectrum.eigenvalues
    elif rotating or gap:
        eigenvalues = la.eigvals(L.matrix)
    modes = ()
    if rotating:
        modes = tuple(rotating_decomposition(L, tol_zero, eigenvalues))
    g = _gap(eigenvalues, tol_zero) if eigenvalues is not None else float("nan")
    return AsymptoticDecomposition(steady=tuple(M), conserved=tuple(J), rotating=modes,
                                   gap=g, tol_zero=tol_zero, singular_values=s)


def coefficients(dec: AsymptoticDecomposition, rho_in: np.ndarray) -> np.ndarray:
    """``Tr{J_mu^dag rho_in}`` for every conserved quantity."""
    rho_in = np.asarray(rho_in, dtype=complex)
    return np.array([np.vdot(J, rho_in) for J in dec.conserved])


def _as_state(dec, rho_in, validate):
    if validate:
        return check_density_matrix(rho_in, dec.n, hermitian_tol=1e-10, trace_tol=1e-10,
                                    psd_tol=1e-10, name="rho_in")
    return np.asarray(rho_in, dtype=complex)


def _finalize(rho: np.ndarray, psd_tol: float) -> np.ndarray:
    tr = np.trace(rho)
    if abs(tr - 1) > 1e-8:
        raise NumericalError(f"asymptotic state has trace {tr:.12g}; conserved quantities mis-normalized")
    return clip_to_density_matrix(rho, psd_tol)


def asymptotic_project(dec: AsymptoticDecomposition, rho_in: np.ndarray, *,
                       psd_tol: float = PSD_TOL, validate: bool = True) -> np.ndarray:
    """Infinite-time state ``sum_mu Tr{J_mu^dag rho_in} M_mu``.

    With rotating modes present this is the time average of the limit cycle.
    """
    rho_in = _as_state(dec, rho_in, validate)
    c = coefficients(dec, rho_in)
    out = np.tensordot(c, np.stack(dec.steady), axes=1)
    return _finalize(out, psd_tol) if validate else out


def infinite_time_state(dec: AsymptoticDecomposition, rho_in: np.ndarray, t: float, *,
                        psd_tol: float = PSD_TOL, validate: bool = True) -> np.ndarray:
    """Limit-cycle state at time ``t`` including oscillating coherences."""
    rho_in = _as_state(dec, rho_in, validate)
    out = asymptotic_project(dec, rho_in, validate=False)
    for mode in dec.rotating:
        out = out + np.exp(1j * mode.frequency * t) * np.vdot(mode.S, rho_in) * mode.O
    return _finalize(out, psd_tol) if validate else out
