"""
Dense operator algebra on finite Hilbert spaces.

Operators are plain ``numpy`` complex arrays of shape ``(N, N)``. Liouville
space vectors use row stacking: entry ``(i, j)`` of an operator lands at index
``i * N + j``, so that ``F @ rho @ F^dag`` corresponds to ``kron(F, F.conj())``
acting on ``vectorize(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HilbertSpace", "vectorize", "devectorize", "hs_inner", "kron", "embed",
    "annihilation", "creation", "number", "operator_power", "partial_trace",
    "commutator", "dag", "PAULI", "basis_ket", "coherent_ket",
    "random_density_matrix", "random_operator", "hermitian_basis_coords",
    "coords_to_hermitian",
]

QUBIT = "qubit"
FOCK = "fock"

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in PAULI.values():
    _m.flags.writeable = False


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of qubit and truncated Fock factors.

    Parameters
    ----------
    factors : tuple of (kind, dim)
        ``kind`` is ``"qubit"`` (dim 2) or ``"fock"`` (dim >= 2).
    """

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(k), int(d)) for k, d in self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise ValueError("a Hilbert space needs at least one factor")
        for i, (kind, dim) in enumerate(factors):
            if kind == QUBIT and dim != 2:
                raise ValueError(f"factor {i}: qubit factors have dim 2, got {dim}")
            if kind == FOCK and dim < 2:
                raise ValueError(f"factor {i}: fock factors need dim >= 2, got {dim}")
            if kind not in (QUBIT, FOCK):
                raise ValueError(f"factor {i}: unknown kind {kind!r}")

    @classmethod
    def qubits(cls, n: int) -> "HilbertSpace":
        return cls(tuple((QUBIT, 2) for _ in range(n)))

    @classmethod
    def fock(cls, dim: int) -> "HilbertSpace":
        return cls(((FOCK, dim),))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.factors)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)


def vectorize(A: np.ndarray) -> np.ndarray:
    """Row-stack an ``N x N`` operator into a length ``N**2`` vector."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return np.array(A, dtype=complex).reshape(-1)


def devectorize(v: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return np.array(v, dtype=complex).reshape(n, n)


def hs_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product ``Tr{A^dag B}``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


def kron(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def dag(A: np.ndarray) -> np.ndarray:
    return np.asarray(A).conj().T


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def embed(site: int, local: np.ndarray, space: HilbertSpace) -> np.ndarray:
    """Place ``local`` on factor ``site`` (0-based), identities elsewhere."""
    if not 0 <= site < len(space):
        raise IndexError(f"site {site} out of range for {len(space)} factors")
    local = np.asarray(local, dtype=complex)
    d = space.dims[site]
    if local.shape != (d, d):
        raise ValueError(f"local operator has shape {local.shape}, factor {site} has dim {d}")
    ops = [np.eye(dd, dtype=complex) for dd in space.dims]
    ops[site] = local
    return kron(*ops)


def annihilation(dim: int) -> np.ndarray:
    """Truncated bosonic lowering operator on ``{|0>, ..., |dim-1>}``.

    ``[a, a^dag]`` differs from the identity only at the top level, where it
    equals ``1 - dim``.
    """
    if dim < 2:
        raise ValueError("Fock truncation needs dim >= 2")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def operator_power(A: np.ndarray, k: int) -> np.ndarray:
    # left-to-right products so that every caller reproduces the same rounding
    if k < 0 or int(k) != k:
        raise ValueError(f"power must be a nonnegative integer, got {k}")
    A = np.asarray(A, dtype=complex)
    out = np.eye(A.shape[0], dtype=complex)
    for _ in range(int(k)):
        out = out @ A
    return out


def partial_trace(A: np.ndarray, keep: Iterable[int], dims: Sequence[int] | HilbertSpace) -> np.ndarray:
    """Trace out every factor not listed in ``keep``."""
    if isinstance(dims, HilbertSpace):
        dims = dims.dims
    dims = list(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise IndexError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    A = np.asarray(A, dtype=complex).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # contract pairs from the highest index down so axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        nleft = n - count
        A = np.trace(A, axis1=i, axis2=i + nleft)
    dk = int(np.prod([dims[k] for k in keep]))
    return A.reshape(dk, dk)


def basis_ket(labels: Sequence[int], space: HilbertSpace) -> np.ndarray:
    """Computational basis ket ``|l_1 l_2 ...>``."""
    if len(labels) != len(space):
        raise ValueError(f"need {len(space)} labels, got {len(labels)}")
    idx = 0
    for lab, d in zip(labels, space.dims):
        if not 0 <= lab < d:
            raise ValueError(f"label {lab} out of range for factor of dim {d}")
        idx = idx * d + lab
    v = np.zeros(space.dim, dtype=complex)
    v[idx] = 1.0
    return v


def coherent_ket(alpha: complex, dim: int, normalize: bool = True) -> tuple[np.ndarray, float]:
    """Truncated coherent state and the probability mass lost to truncation."""
    from scipy.special import gammaln

    n = np.arange(dim)
    x = abs(alpha) ** 2
    if alpha == 0:
        amp = np.zeros(dim, dtype=complex)
        amp[0] = 1.0
        return amp, 0.0
    logmag = -x / 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    amp = np.exp(logmag) * np.exp(1j * np.angle(alpha) * n)
    kept = float(np.sum(np.abs(amp) ** 2))
    tail = max(0.0, 1.0 - kept)
    if normalize:
        amp = amp / np.sqrt(kept)
    return amp, tail


def random_operator(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    G = rng.standard_normal((n, rank or n)) + 1j * rng.standard_normal((n, rank or n))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def hermitian_basis_coords(X: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in an orthonormal Hermitian basis.

    The map is an isometry from Hermitian matrices with the Frobenius norm to
    ``R^(N^2)`` with the Euclidean norm. Only the Hermitian part of ``X`` is
    represented.
    """
    X = np.asarray(X)
    n = X.shape[0]
    iu = np.triu_indices(n, k=1)
    H = 0.5 * (X + X.conj().T)
    return np.concatenate([
        np.real(np.diag(H)),
        np.sqrt(2) * np.real(H[iu]),
        np.sqrt(2) * np.imag(H[iu]),
    ])


def coords_to_hermitian(c: np.ndarray, n: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    iu = np.triu_indices(n, k=1)
    m = len(iu[0])
    H = np.zeros((n, n), dtype=complex)
    H[np.diag_indices(n)] = c[:n]
    upper = (c[n:n + m] + 1j * c[n + m:]) / np.sqrt(2)
    H[iu] = upper
    H[(iu[1], iu[0])] = upper.conj()
    return H
