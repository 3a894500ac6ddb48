"""
Direct time propagation, used as an independent check of the asymptotics.

Everything here exponentiates the full superoperator matrix (scaling and
squaring with a Pade approximant), which is valid even when the Liouvillian
is not diagonalizable.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .asymptotics import AsymptoticDecomposition, asymptotic_project, infinite_time_state
from .liouvillian import Liouvillian
from .operator_core import devectorize, vectorize
from .validation import check_square

__all__ = [
    "Propagator", "propagate", "heisenberg_propagate", "convergence_profile",
    "late_time_slope", "choi_matrix", "trace_distance", "verification_horizon",
]

HORIZON_FACTOR = 30.0


def _check_time(t: float) -> float:
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"time must be finite and nonnegative, got {t}")
    return t


@dataclass(frozen=True, eq=False)
class Propagator:
    """``exp(L t)`` as a matrix; built on first use and reusable."""

    L: Liouvillian
    t: float

    def __post_init__(self):
        object.__setattr__(self, "t", _check_time(self.t))

    @cached_property
    def matrix(self) -> np.ndarray:
        P = la.expm(self.L.matrix * self.t)
        P.flags.writeable = False
        return P

    @cached_property
    def adjoint_matrix(self) -> np.ndarray:
        P = la.expm(self.L.adjoint_matrix * self.t)
        P.flags.writeable = False
        return P

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = check_square(rho, self.L.dim, name="rho")
        return devectorize(self.matrix @ vectorize(rho), self.L.dim)

    def heisenberg(self, X: np.ndarray) -> np.ndarray:
        X = check_square(X, self.L.dim, name="X")
        return devectorize(self.adjoint_matrix @ vectorize(X), self.L.dim)


def propagate(L: Liouvillian, rho: np.ndarray, t: float) -> np.ndarray:
    """State at time ``t`` starting from ``rho`` (Schrodinger picture).

    Raises
    ------
    ValueError
        If ``t < 0``; the dynamics is a semigroup.
    """
    return Propagator(L, t)(rho)


def heisenberg_propagate(L: Liouvillian, X: np.ndarray, t: float) -> np.ndarray:
    """Observable ``X`` evolved for time ``t`` by the adjoint generator."""
    return Propagator(L, t).heisenberg(X)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of ``a - b`` (symmetrized)."""
    d = a - b
    d = 0.5 * (d + d.conj().T)
    return 0.5 * float(np.sum(np.abs(la.eigvalsh(d))))


def verification_horizon(gap: float, factor: float = HORIZON_FACTOR) -> float | None:
    """Time ``factor / gap`` after which transients are below ``exp(-factor)``.

    Returns ``None`` when nothing decays (infinite gap), in which case there
    is no transient to wait out and a propagation check is meaningless.
    """
    if not np.isfinite(gap) or gap <= 0:
        return None
    return factor / gap


def convergence_profile(L: Liouvillian, rho: np.ndarray, times: Sequence[float],
                        dec: AsymptoticDecomposition) -> list[tuple[float, float]]:
    """Trace distance between the propagated state and its infinite-time limit.

    With rotating coherences the limit is the limit cycle at the same time.
    The state is advanced step by step; equal steps share one exponential.
    """
    times = [_check_time(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be sorted")
    out = []
    steps: dict[float, Propagator] = {}
    state, now = np.asarray(rho, dtype=complex), 0.0
    for t in times:
        dt = round(t - now, 12)
        if dt > 0:
            if dt not in steps:
                steps[dt] = Propagator(L, dt)
            state = steps[dt](state)
        now = t
        if dec.rotating:
            target = infinite_time_state(dec, rho, t, validate=False)
        else:
            target = asymptotic_project(dec, rho, validate=False)
        out.append((t, trace_distance(state, target)))
    return out


def late_time_slope(profile: Sequence[tuple[float, float]], floor: float = 1e-12) -> float:
    """Least-squares slope of ``log(distance)`` over the later half of the profile.

    Points at or below ``floor`` are rounding noise and are dropped.
    """
    pts = [(t, d) for t, d in profile if d > floor]
    if len(pts) < 2:
        raise ValueError("need at least two distances above the floor to fit a slope")
    pts = pts[len(pts) // 2:] if len(pts) >= 4 else pts
    t = np.array([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(t, y, 1)[0])


def choi_matrix(L: Liouvillian, t: float) -> np.ndarray:
    """Normalized Choi matrix ``(1/N) sum_ij |i><j| (x) exp(Lt)(|i><j|)``.

    It is positive semidefinite exactly when the map is completely positive.
    """
    n = L.dim
    P = Propagator(L, t).matrix
    C = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            C += np.kron(E, devectorize(P[:, i * n + j], n))
    return C / n
