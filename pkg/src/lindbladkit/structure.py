"""
Symmetries, sector decompositions and the block structure of the steady space.

The steady-state space of any Lindbladian is, in a suitable frame,

    steady operators = direct sum over kappa of  (n_kappa x n_kappa matrices) (x) T_kappa

with fixed ``m_kappa x m_kappa`` density matrices ``T_kappa``, plus a
Hamiltonian ``H_inf`` acting on the ``n`` factors when coherences rotate.
:func:`block_structure` finds the frame, ``n``, ``m`` and ``T`` numerically.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .asymptotics import (AsymptoticDecomposition, asymptotic_project, biorthogonal_duals,
                          canonical_real_basis, null_space)
from .liouvillian import Liouvillian, Model, heisenberg_rhs, lindblad_rhs
from .operator_core import (coords_to_hermitian, hermitian_basis_coords, partial_trace,
                            vectorize)
from .validation import NumericalError, check_square

__all__ = [
    "SymmetryReport", "Sector", "SectorPartition", "Block", "BlockStructure",
    "interior_mask", "check_conserved", "check_strong_symmetry", "check_weak_symmetry",
    "symmetry_report", "find_symmetry_generators", "parity_partition", "sector_project",
    "block_structure", "extract_rotation_hamiltonian", "subspace_symmetry_check",
]

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
GENERATOR_MAX_DIM = 16
EXACT_CROSS_CHECK_MAX_DIM = 16


def _norm(A) -> float:
    return float(np.linalg.norm(A))


def _maxabs(A) -> float:
    return float(np.max(np.abs(A), initial=0.0))


# ----------------------------------------------------------------------------
# symmetry checks


@dataclass(frozen=True, eq=False)
class SymmetryReport:
    """Which symmetry notions an operator satisfies, with the residuals used.

    ``residuals`` holds the relative residuals ``conserved``, ``strong`` and
    ``weak``; a flag is true when its residual is below ``tol``.
    """

    operator: np.ndarray
    strong: bool
    weak: bool
    conserved: bool
    residuals: dict = field(default_factory=dict)


def interior_mask(n: int, margin: int) -> np.ndarray:
    """Boolean ``n x n`` mask excluding the last ``margin`` rows and columns."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    keep = np.arange(n) < n - margin
    return np.outer(keep, keep)


def _operator_scale(model: Model) -> float:
    # bound on the size of L^dag acting on a unit-norm operator
    s = 2 * _norm(model.hamiltonian)
    for F in model.jumps:
        s += 4 * _norm(F) ** 2
    return max(1.0, s)


def _model(L) -> Model:
    return L.model if isinstance(L, Liouvillian) else L


def conserved_residual(A, L, interior_margin: int = 0) -> float:
    """``||L^dag(A)|| / (||A|| * scale)`` restricted to the interior block."""
    model = _model(L)
    A = check_square(A, model.dim, name="A")
    R = heisenberg_rhs(model, A)
    if interior_margin:
        mask = interior_mask(model.dim, interior_margin)
        R = np.where(mask, R, 0)
    denom = max(_norm(A), 1e-300) * _operator_scale(model)
    return _norm(R) / denom


def check_conserved(A, L, tol: float = DEFAULT_TOL, interior_margin: int = 0) -> bool:
    """True iff ``L^dag(A) = 0`` relative to ``||A||`` and the size of the generator.

    For truncated bosonic models the analytic conserved quantities are exact
    only away from the cutoff; ``interior_margin`` drops that many top Fock
    levels from the residual.
    """
    return conserved_residual(A, L, interior_margin) < tol


def strong_residual(A, model) -> float:
    model = _model(model)
    A = check_square(A, model.dim, name="A")
    na = max(_norm(A), 1e-300)
    worst = _norm(A @ model.hamiltonian - model.hamiltonian @ A) / (na * max(1.0, _norm(model.hamiltonian)))
    for F in model.jumps:
        worst = max(worst, _norm(A @ F - F @ A) / (na * max(1.0, _norm(F))))
    return worst


def check_strong_symmetry(A, model, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``A`` commutes with the Hamiltonian and with every jump operator."""
    return strong_residual(A, model) < tol


def _generator_superop(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    eye = np.eye(n)
    return np.kron(A, eye) - np.kron(eye, A.conj())


def weak_residual(A, L: Liouvillian) -> float:
    A = check_square(A, L.dim, name="A")
    Ah = _generator_superop(A)
    C = Ah @ L.matrix - L.matrix @ Ah
    return _maxabs(C) / max(1.0, _maxabs(Ah) * L.scale)


def check_weak_symmetry(A, L: Liouvillian, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``A (x) I - I (x) A^*`` commutes with the Liouvillian matrix."""
    return weak_residual(A, L) < tol


def symmetry_report(A, L: Liouvillian, tol: float = DEFAULT_TOL,
                    interior_margin: int = 0) -> SymmetryReport:
    res = {
        "conserved": conserved_residual(A, L, interior_margin),
        "strong": strong_residual(A, L.model),
        "weak": weak_residual(A, L),
    }
    return SymmetryReport(operator=np.asarray(A, dtype=complex), strong=res["strong"] < tol,
                          weak=res["weak"] < tol, conserved=res["conserved"] < tol,
                          residuals=res)


def find_symmetry_generators(L: Liouvillian, tol: float = DEFAULT_TOL,
                             max_dim: int = GENERATOR_MAX_DIM) -> list[np.ndarray]:
    """Hermitian ``A`` with ``[A (x) I - I (x) A^*, L] = 0``.

    The map is linear over the reals on Hermitian ``A``, so it is assembled in
    real coordinates and its null space read off an SVD. The returned basis is
    orthonormal and starts with ``I / sqrt(N)``.

    Raises
    ------
    ValueError
        If ``N > max_dim``: the map has ``N**4`` rows and ``N**2`` columns.
    """
    n = L.dim
    if n > max_dim:
        raise ValueError(f"symmetry search is limited to dimension {max_dim}, model has {n}")
    Lm = L.matrix
    cols = []
    for k in range(n * n):
        e = np.zeros(n * n)
        e[k] = 1.0
        Ah = _generator_superop(coords_to_hermitian(e, n))
        C = (Ah @ Lm - Lm @ Ah).reshape(-1)
        cols.append(np.concatenate([C.real, C.imag]))
    K = np.stack(cols, axis=1)
    _, s, Vh = la.svd(K, full_matrices=False)
    cut = tol * max(s[0], 1.0)
    null = Vh[s < cut].T
    ident = hermitian_basis_coords(np.eye(n)) / np.sqrt(n)
    rest = null - np.outer(ident, ident @ null)
    if rest.shape[1]:
        U, sr, _ = la.svd(rest, full_matrices=False)
        rest = canonical_real_basis(U[:, sr > 0.5])
    return [np.eye(n, dtype=complex) / np.sqrt(n)] + [coords_to_hermitian(c, n) for c in rest.T]


def subspace_symmetry_check(U, dec: AsymptoticDecomposition, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``U^dag M U`` stays in the steady space for every steady ``M``.

    Raises
    ------
    ValueError
        If ``U`` is not unitary within ``1e-10``.
    """
    U = check_square(U, dec.n, name="U")
    dev = _maxabs(U.conj().T @ U - np.eye(dec.n))
    if dev > 1e-10:
        raise ValueError(f"U is not unitary: max |U^dag U - I| = {dev:.3g}")
    B = np.stack([vectorize(m) for m in dec.steady], axis=1)
    worst = 0.0
    for M in dec.steady:
        v = vectorize(U.conj().T @ M @ U)
        worst = max(worst, _norm(v - B @ (B.conj().T @ v)))
    return worst < tol


# ----------------------------------------------------------------------------
# conserved-projector sectors


@dataclass(frozen=True, eq=False)
class Sector:
    """Block ``Pi_mu rho Pi_nu`` of Liouville space and its generator."""

    key: tuple
    rows: np.ndarray
    cols: np.ndarray
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class SectorPartition:
    """Liouville space split by a complete set of conserved projectors.

    Attributes
    ----------
    projectors : tuple of ndarray
    isometries : tuple of ndarray
        ``V_mu`` with orthonormal columns and ``V_mu V_mu^dag = Pi_mu``.
    sectors : dict
        ``(mu, nu) -> Sector``; the sector generator acts on row-stacked
        ``V_mu^dag rho V_nu``.
    labels : ndarray or None
        Sector index ``mu * d + nu`` of every Liouville basis direction, when
        all projectors are diagonal.
    cross_residual : float
        Largest leakage of the full generator out of any sector.
    """

    model: Model
    projectors: tuple
    isometries: tuple
    sectors: dict
    labels: np.ndarray | None
    cross_residual: float

    def __len__(self):
        return len(self.sectors)


def _check_projectors(projectors, model: Model, tol: float) -> list[np.ndarray]:
    n = model.dim
    P = [check_square(p, n, name=f"projector {i}") for i, p in enumerate(projectors)]
    problems = []
    for i, p in enumerate(P):
        if _maxabs(p - p.conj().T) > tol:
            problems.append(f"projector {i} is not Hermitian")
        if _maxabs(p @ p - p) > tol:
            problems.append(f"projector {i} is not idempotent (|P^2 - P| = {_maxabs(p @ p - p):.3g})")
        if not check_conserved(p, model, tol):
            problems.append(f"projector {i} is not conserved")
        if not check_strong_symmetry(p, model, tol):
            problems.append(f"projector {i} does not commute with the Hamiltonian and jumps")
        for j in range(i):
            if _maxabs(p @ P[j]) > tol:
                problems.append(f"projectors {j} and {i} are not orthogonal")
    total = sum(P) if P else np.zeros((n, n))
    if _maxabs(total - np.eye(n)) > tol:
        problems.append("projectors do not sum to the identity")
    if problems:
        raise ValueError("invalid projector set: " + "; ".join(problems))
    return P


def _isometry(P: np.ndarray) -> np.ndarray:
    diag = np.real(np.diag(P))
    if _maxabs(P - np.diag(np.diag(P))) == 0:
        return np.eye(P.shape[0], dtype=complex)[:, diag > 0.5]
    w, V = la.eigh(P)
    return V[:, w > 0.5]


def _sector_generator(model: Model, Vm: np.ndarray, Vn: np.ndarray) -> np.ndarray:
    # generator on row-stacked X = Vm^dag rho Vn; valid because every operator
    # of the model commutes with the projectors
    def comp(V, A):
        return V.conj().T @ A @ V

    H = model.hamiltonian
    Im, In = np.eye(Vm.shape[1]), np.eye(Vn.shape[1])
    out = -1j * (np.kron(comp(Vm, H), In) - np.kron(Im, comp(Vn, H).conj()))
    for F in model.jumps:
        FdF = F.conj().T @ F
        out += (2 * np.kron(comp(Vm, F), comp(Vn, F).conj())
                - np.kron(comp(Vm, FdF), In) - np.kron(Im, comp(Vn, FdF).conj()))
    return out


def parity_partition(projectors, L, tol: float = DEFAULT_TOL) -> SectorPartition:
    """Split Liouville space into the ``d**2`` sectors ``Pi_mu rho Pi_nu``.

    Each projector must be Hermitian, idempotent, conserved and commute with
    the Hamiltonian and every jump; together they must be orthogonal and sum
    to the identity. Every violation is reported.

    The sector generators are built directly from the compressed operators,
    so the full ``N**2 x N**2`` matrix is never formed for large ``N``. For
    ``N <= 16`` the cross-sector blocks of the full matrix are checked as well.
    """
    model = _model(L)
    P = _check_projectors(projectors, model, tol)
    V = [_isometry(p) for p in P]
    d = len(P)
    n = model.dim
    sectors = {}
    for mu in range(d):
        for nu in range(d):
            sectors[(mu, nu)] = Sector((mu, nu), V[mu], V[nu], _sector_generator(model, V[mu], V[nu]))
    labels = None
    if all(_maxabs(p - np.diag(np.diag(p))) == 0 for p in P):
        owner = np.zeros(n, dtype=int)
        for mu, p in enumerate(P):
            owner[np.real(np.diag(p)) > 0.5] = mu
        labels = (owner[:, None] * d + owner[None, :]).reshape(-1)
    cross = 0.0
    if n <= EXACT_CROSS_CHECK_MAX_DIM:
        full = L.matrix if isinstance(L, Liouvillian) else Liouvillian(model).matrix
        scale = max(1.0, _maxabs(full))
        for (mu, nu), sec in sectors.items():
            B = np.kron(V[mu], V[nu].conj())
            leak = full @ B - B @ sec.matrix
            cross = max(cross, _maxabs(leak) / scale)
    else:
        for F in (model.hamiltonian, *model.jumps, *(F.conj().T @ F for F in model.jumps)):
            for p in P:
                cross = max(cross, _maxabs(p @ F - F @ p) / max(1.0, _maxabs(F)))
    if cross > tol:
        raise NumericalError(f"generator couples different sectors (residual {cross:.3g})")
    return SectorPartition(model=model, projectors=tuple(P), isometries=tuple(V),
                           sectors=sectors, labels=labels, cross_residual=cross)


def sector_project(partition: SectorPartition, rho_in, keys=None,
                   tol: float = DEFAULT_TOL) -> np.ndarray:
    """Infinite-time state computed sector by sector.

    Each sector's steady vectors and conserved duals come from one SVD of its
    generator. ``keys`` restricts the computation to the listed ``(mu, nu)``
    sectors; the other blocks of the result are left at zero.
    """
    n = partition.model.dim
    rho_in = check_square(rho_in, n, name="rho_in")
    keys = list(partition.sectors) if keys is None else [tuple(k) for k in keys]
    out = np.zeros((n, n), dtype=complex)
    for key in keys:
        sec = partition.sectors[key]
        right, left, _ = null_space(sec.matrix, tol)
        if right.shape[1] == 0:
            continue
        duals = biorthogonal_duals(right, left)
        x = (sec.rows.conj().T @ rho_in @ sec.cols).reshape(-1)
        block = (right @ (duals.conj().T @ x)).reshape(sec.rows.shape[1], sec.cols.shape[1])
        out += sec.rows @ block @ sec.cols.conj().T
    return out


def sector_steady_dims(partition: SectorPartition, tol: float = DEFAULT_TOL) -> dict:
    """Number of steady directions in each sector."""
    return {k: int(null_space(s.matrix, tol)[0].shape[1]) for k, s in partition.sectors.items()}


__all__.append("sector_steady_dims")


# ----------------------------------------------------------------------------
# block structure


@dataclass(frozen=True, eq=False)
class Block:
    """One summand ``(n x n matrices) (x) T`` of the steady space.

    ``basis`` has ``n * m`` orthonormal columns ordered ``(mu, j)`` with ``mu``
    the ``n``-factor index, so ``basis @ kron(X, T) @ basis^dag`` embeds a
    factor operator ``X`` back into the full space.
    """

    n: int
    m: int
    T: np.ndarray
    basis: np.ndarray

    def embed(self, X: np.ndarray) -> np.ndarray:
        return self.basis @ np.kron(X, self.T) @ self.basis.conj().T

    def factor(self, A: np.ndarray) -> np.ndarray:
        """``Tr_m`` of ``A`` restricted to the block (inverse of :meth:`embed` on its range)."""
        B = self.basis.conj().T @ A @ self.basis
        return partial_trace(B, [0], [self.n, self.m])


@dataclass(frozen=True, eq=False)
class BlockStructure:
    """Block decomposition of the steady space with its factor states.

    Attributes
    ----------
    blocks : list of Block
        Sorted by descending ``n``, then descending ``m``, then basis order.
    energies : list of ndarray
        Per block, the levels ``E_mu`` of ``H_inf`` with ``min E = 0``.
    support_dim : int
        Rank of the maximal-support steady state.
    residual : float
        Largest reconstruction error over the steady basis.
    seed : int
        Probe seed that succeeded.
    """

    blocks: list
    energies: list
    support_dim: int
    residual: float
    seed: int

    @property
    def capacity(self) -> int:
        return sum(b.n ** 2 for b in self.blocks)


def _orth(vecs: np.ndarray, rtol: float) -> np.ndarray:
    if vecs.shape[1] == 0:
        return vecs
    U, s, _ = la.svd(vecs, full_matrices=False)
    return U[:, s > rtol * max(s[0], 1e-300)]


def _algebra_basis(elems: list, tol: float, max_rounds: int) -> np.ndarray:
    """Orthonormal basis (vectorized columns) of the *-algebra generated by ``elems``."""
    r = elems[0].shape[0]
    seed = [e for x in elems for e in (x, x.conj().T)]
    Q = _orth(np.stack([x.reshape(-1) for x in seed], axis=1), tol)
    for _ in range(max_rounds):
        mats = [q.reshape(r, r) for q in Q.T]
        prods = np.stack([(a @ b).reshape(-1) for a in mats for b in mats], axis=1)
        resid = prods - Q @ (Q.conj().T @ prods)
        if _maxabs(resid) < tol * max(1.0, _maxabs(prods)):
            return Q
        Q = _orth(np.concatenate([Q, resid], axis=1), tol)
    raise NumericalError(f"algebra closure did not converge within {max_rounds} rounds")


def _cluster(w: np.ndarray, gap: float) -> list[np.ndarray]:
    order = np.argsort(w)
    groups = [[order[0]]]
    for a, b in zip(order[:-1], order[1:]):
        if w[b] - w[a] > gap:
            groups.append([b])
        else:
            groups[-1].append(b)
    return [np.array(g) for g in groups]


def _random_hermitian(Q: np.ndarray, r: int, rng) -> np.ndarray:
    c = rng.standard_normal(Q.shape[1]) + 1j * rng.standard_normal(Q.shape[1])
    A = (Q @ c).reshape(r, r)
    return 0.5 * (A + A.conj().T)


def _probe_spaces(Q, r, count, rng, collision):
    """Eigenspaces of a random Hermitian element; ``None`` on a collision."""
    h = _random_hermitian(Q, r, rng)
    w, V = la.eigh(h)
    spread = max(w[-1] - w[0], 1.0)
    groups = _cluster(w, 1e-6 * spread)
    if len(groups) != count:
        return None
    centers = np.array([w[g].mean() for g in groups])
    if count > 1 and np.min(np.diff(np.sort(centers))) < collision * spread:
        return None
    return [V[:, g] for g in groups]


def _factor_block(Vk, Qa, r, tol, rng, collision):
    """Frame of one block: ``(n, m, columns)`` with ``columns`` ordered ``(mu, j)``."""
    dk = Vk.shape[1]
    elems = [Vk.conj().T @ q.reshape(r, r) @ Vk for q in Qa.T]
    Qk = _orth(np.stack([e.reshape(-1) for e in elems], axis=1), 1e-8)
    rank = Qk.shape[1]
    n = int(round(np.sqrt(rank)))
    if n * n != rank or dk % n:
        raise NumericalError(f"block of dimension {dk} carries an algebra of dimension {rank}, "
                             "which is not a full matrix algebra")
    m = dk // n
    if n == 1:
        return n, m, Vk
    spaces = _probe_spaces(Qk, dk, n, rng, collision)
    if spaces is None or any(s.shape[1] != m for s in spaces):
        return None
    a = (Qk @ (rng.standard_normal(rank) + 1j * rng.standard_normal(rank))).reshape(dk, dk)
    cols = [spaces[0]]
    for E in spaces[1:]:
        B = E.conj().T @ a @ spaces[0]
        s = _norm(B) / np.sqrt(m)
        if s < 1e-6 * max(_norm(a), 1.0):
            return None
        U = B / s
        if _maxabs(U.conj().T @ U - np.eye(m)) > 1e-6:
            return None
        cols.append(E @ U)
    return n, m, Vk @ np.concatenate(cols, axis=1)


def _rotation_generator(model: Model, W: np.ndarray, n: int, m: int, T: np.ndarray) -> np.ndarray:
    """``H`` with ``Tr_m[W^dag L(W (X (x) T) W^dag) W] = -i[H, X]`` for all ``X``."""
    rows, rhs = [], []
    eye = np.eye(n)
    for a in range(n):
        for b in range(n):
            X = np.zeros((n, n), dtype=complex)
            X[a, b] = 1.0
            image = W.conj().T @ lindblad_rhs(model, W @ np.kron(X, T) @ W.conj().T) @ W
            rhs.append(partial_trace(image, [0], [n, m]).reshape(-1))
            rows.append(-1j * (np.kron(eye, X.T) - np.kron(X, eye)))
    A = np.concatenate(rows, axis=0)
    y = np.concatenate(rhs)
    h, *_ = la.lstsq(A, y)
    H = h.reshape(n, n)
    H = 0.5 * (H + H.conj().T)
    H -= np.trace(H) / n * eye
    resid = _maxabs(A @ H.reshape(-1) - y)
    return H, resid


def _first_index(W: np.ndarray) -> int:
    return int(np.min(np.argmax(np.abs(W) > 1e-8, axis=0)))


def block_structure(dec: AsymptoticDecomposition, L, seed: int = 0, tol: float = 1e-8,
                    support_tol: float = 1e-10, max_retries: int = 8,
                    collision: float = 1e-8) -> BlockStructure:
    """Find the frame in which the steady space is ``sum_kappa M_n (x) T_kappa``.

    Steps: the maximal-support steady state ``rho*`` of ``I/N`` fixes the
    support; steady operators times ``rho*^-1`` (restricted to the support)
    generate a *-algebra whose center labels the blocks and whose simple
    components give ``n`` and ``m``. Random elements of the center and of each
    component, drawn with ``seed`` and retried with ``seed + 1, ...`` on
    eigenvalue collisions, split the spaces. When coherences rotate, the
    ``n``-factor frame is rotated to diagonalize ``H_inf``. Finally every
    steady basis element is rebuilt from the claimed form.

    Raises
    ------
    NumericalError
        If the algebra does not close, no probe separates the blocks within
        ``max_retries`` retries, or the reconstruction error exceeds ``tol``.
    """
    model = _model(L)
    N = dec.n
    rho_star = asymptotic_project(dec, np.eye(N) / N)
    w, V = la.eigh(rho_star)
    Vs = V[:, w > support_tol * w.max()]
    r = Vs.shape[1]
    P = Vs @ Vs.conj().T
    elems = list(dec.steady) + [mode.O for mode in dec.rotating]
    for e in elems:
        off = _norm(e - P @ e @ P) / max(_norm(e), 1e-300)
        if off > tol * 100:
            raise NumericalError(f"steady element leaves the support of rho* (residual {off:.3g})")
    Rinv = la.inv(Vs.conj().T @ rho_star @ Vs)
    gens = [Vs.conj().T @ e @ Vs @ Rinv for e in elems]
    Qa = _algebra_basis(gens, 1e-8, max_rounds=max(len(elems) ** 2, 1))
    D = len(elems)
    if Qa.shape[1] != D:
        raise NumericalError(f"steady operators generate an algebra of dimension {Qa.shape[1]}, "
                             f"expected {D}")
    mats = [q.reshape(r, r) for q in Qa.T]
    K = np.concatenate([np.stack([(a @ b - b @ a).reshape(-1) for b in mats], axis=1)
                        for a in mats], axis=0)
    center, _, _ = null_space(K, 1e-8)
    nblocks = center.shape[1]
    Zq = _orth(Qa @ center, 1e-8)
    result = None
    for attempt in range(max_retries + 1):
        rng = np.random.default_rng(seed + attempt)
        spaces = _probe_spaces(Zq, r, nblocks, rng, collision)
        if spaces is None:
            continue
        frames = []
        for Vk in spaces:
            f = _factor_block(Vk, Qa, r, tol, rng, collision)
            if f is None:
                break
            frames.append(f)
        if len(frames) == nblocks:
            result = (seed + attempt, frames)
            break
        logger.info("probe with seed %d collided; retrying", seed + attempt)
    if result is None:
        raise NumericalError(f"no probe separated the blocks within {max_retries} retries")
    used, frames = result
    blocks, energies = [], []
    for n, m, cols in frames:
        W = Vs @ cols
        T = partial_trace(W.conj().T @ rho_star @ W, [1], [n, m])
        T = 0.5 * (T + T.conj().T)
        T /= np.trace(T).real
        if m > 1:
            # the m-factor frame is free; choose the eigenbasis of T
            p, u = la.eigh(T)
            u = u[:, ::-1]
            W = W @ np.kron(np.eye(n), u)
            T = np.diag(p[::-1]).astype(complex)
        if n > 1 and dec.rotating:
            H, hres = _rotation_generator(model, W, n, m, T)
            if hres > 1e-6 * max(1.0, _maxabs(H)):
                raise NumericalError(f"block dynamics is not a commutator (residual {hres:.3g})")
            if _maxabs(H) > tol:
                _, u = la.eigh(H)
                W = W @ np.kron(u, np.eye(m))
        blocks.append(Block(n=n, m=m, T=T, basis=W))
    blocks.sort(key=lambda b: (-b.n, -b.m, _first_index(b.basis)))
    residual = 0.0
    for e in elems:
        rebuilt = np.zeros_like(e)
        for b in blocks:
            rebuilt += b.embed(b.factor(e))
        residual = max(residual, _norm(e - rebuilt) / max(_norm(e), 1e-300))
    if residual > tol:
        raise NumericalError(f"block reconstruction residual {residual:.3g} exceeds {tol:g}")
    structure = BlockStructure(blocks=blocks, energies=[np.zeros(b.n) for b in blocks],
                               support_dim=r, residual=residual, seed=used)
    if dec.rotating:
        structure = BlockStructure(blocks=blocks,
                                   energies=extract_rotation_hamiltonian(dec.rotating, structure),
                                   support_dim=r, residual=residual, seed=used)
    return structure


def extract_rotation_hamiltonian(rotating, blocks: BlockStructure, tol: float = 1e-8,
                                 entry_tol: float = 1e-6) -> list[np.ndarray]:
    """Per-block levels ``E_mu`` with ``E_nu - E_mu`` equal to each rotation frequency.

    Every rotating coherence ``O`` is located in the block frame; an entry
    ``(mu, nu)`` of its factor gives the equation ``E_nu - E_mu = lambda``.
    Pairs never hit by a rotating coherence are static and give
    ``E_nu - E_mu = 0``. Levels are fixed by ``min E = 0``.

    Raises
    ------
    ValueError
        If the frequencies are not consistent differences of levels.
    """
    blist = blocks.blocks if isinstance(blocks, BlockStructure) else list(blocks)
    equations = [dict() for _ in blist]
    for mode in rotating:
        for k, b in enumerate(blist):
            X = b.factor(mode.O)
            big = np.abs(X) > entry_tol * max(_maxabs(X), 1e-300)
            if _maxabs(X) < entry_tol:
                continue
            for mu, nu in zip(*np.nonzero(big)):
                equations[k].setdefault((int(mu), int(nu)), []).append(mode.frequency)
    out = []
    for k, b in enumerate(blist):
        n = b.n
        rows, rhs = [], []
        for mu in range(n):
            for nu in range(n):
                if mu == nu:
                    continue
                for lam in equations[k].get((mu, nu), [0.0]):
                    row = np.zeros(n)
                    row[nu] += 1.0
                    row[mu] -= 1.0
                    rows.append(row)
                    rhs.append(lam)
        if not rows:
            out.append(np.zeros(n))
            continue
        A, y = np.array(rows), np.array(rhs)
        E, *_ = la.lstsq(A, y)
        E = E - E.min()
        resid = float(np.max(np.abs(A @ E - y)))
        if resid > tol * max(1.0, float(np.max(np.abs(y)))):
            raise ValueError(f"rotation frequencies in block {k} are not level differences "
                             f"(residual {resid:.3g}); the block assignment is inconsistent")
        out.append(E)
    return out
