"""scikit-learn style estimator around the infinite-time map."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .asymptotics import asymptotic_project, coefficients, decompose, infinite_time_state
from .liouvillian import Liouvillian, Model
from .validation import check_state_batch

__all__ = ["AsymptoticProjector"]


class AsymptoticProjector(TransformerMixin, BaseEstimator):
    """Map initial states to their infinite-time limit.

    ``fit`` takes a :class:`~lindbladkit.liouvillian.Model` (or a
    :class:`~lindbladkit.liouvillian.Liouvillian`) and computes the steady
    basis, the conserved quantities and the rotating coherences once.
    ``transform`` then applies ``rho -> sum_mu Tr{J_mu^dag rho} M_mu`` to any
    number of states, and ``predict`` evaluates the limit cycle at time ``t``.

    Parameters
    ----------
    tol : float, default=1e-9
        Relative singular-value threshold for the null spaces.
    tol_zero : float or None, default=None
        Absolute eigenvalue threshold for the imaginary axis; ``None`` scales
        ``tol`` by the largest matrix entry.
    rotating : bool, default=True
        Whether to compute oscillating coherences.
    validate : bool, default=True
        Check inputs as density matrices and clip rounding-level negative
        eigenvalues of outputs.

    Attributes
    ----------
    decomposition_ : AsymptoticDecomposition
    n_steady_ : int
        Dimension of the steady-state space.
    gap_ : float
        Dissipation gap (``inf`` when nothing decays).
    frequencies_ : ndarray
        Rotation frequencies of the oscillating coherences.
    n_features_in_ : int
        Hilbert-space dimension ``N``.

    Examples
    --------
    >>> from lindbladkit.models import dephasing
    >>> proj = AsymptoticProjector().fit(dephasing().model)
    >>> proj.n_steady_
    2
    """

    def __init__(self, tol: float = 1e-9, tol_zero: float | None = None, rotating: bool = True,
                 validate: bool = True):
        self.tol = tol
        self.tol_zero = tol_zero
        self.rotating = rotating
        self.validate = validate

    def fit(self, X, y=None):
        if isinstance(X, Model):
            L = Liouvillian(X)
        elif isinstance(X, Liouvillian):
            L = X
        else:
            raise TypeError(f"fit expects a Model or Liouvillian, got {type(X).__name__}")
        dec = decompose(L, tol=self.tol, tol_zero=self.tol_zero, rotating=self.rotating)
        self.liouvillian_ = L
        self.decomposition_ = dec
        self.n_steady_ = dec.dim
        self.gap_ = dec.gap
        self.frequencies_ = np.array([m.frequency for m in dec.rotating])
        self.n_features_in_ = L.dim
        return self

    def _apply(self, X, fn):
        check_is_fitted(self, "decomposition_")
        batch, restore = check_state_batch(X, self.n_features_in_)
        out = np.stack([fn(rho) for rho in batch])
        return restore(out)

    def transform(self, X):
        """Infinite-time state of one ``(N, N)`` state or a batch.

        Accepts ``(N, N)``, ``(B, N, N)`` or row-stacked ``(B, N*N)`` input
        and returns the same shape.
        """
        return self._apply(X, lambda r: asymptotic_project(self.decomposition_, r,
                                                           validate=self.validate))

    def predict(self, X, t: float = 0.0):
        """Limit-cycle state at time ``t`` (equals :meth:`transform` without rotation)."""
        return self._apply(X, lambda r: infinite_time_state(self.decomposition_, r, t,
                                                            validate=self.validate))

    def coefficients(self, X):
        """``Tr{J_mu^dag rho}`` for every conserved quantity; shape ``(..., D)``."""
        check_is_fitted(self, "decomposition_")
        batch, _ = check_state_batch(X, self.n_features_in_)
        out = np.stack([coefficients(self.decomposition_, r) for r in batch])
        n = self.n_features_in_
        return out[0] if np.shape(X) == (n, n) else out
