"""Shared checks for the test suite."""
import numpy as np
import scipy.linalg as la

from lindbladkit.liouvillian import Model
from lindbladkit.models import d_photon, dephasing, driven_two_qubit, two_qubit
from lindbladkit.operator_core import vectorize


def catalog_models():
    """Small instances of every catalog model, keyed by a readable id."""
    return {
        "dephasing": dephasing(),
        "two_qubit": two_qubit(),
        "driven_two_qubit": driven_two_qubit(1.0),
        "d_photon_2": d_photon(2, 8),
        "d_photon_3": d_photon(3, 13),
    }


def random_unitary(n, rng):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def rotated(model: Model, U, scale=1.0) -> Model:
    """Same dynamics in another basis, with all rates and energies scaled."""
    Ud = U.conj().T
    H = scale * U @ model.hamiltonian @ Ud
    H = 0.5 * (H + H.conj().T)
    jumps = [np.sqrt(scale) * U @ F @ Ud for F in model.jumps]
    return Model(model.space, H, jumps, name=model.name)


def span_angle(A_list, B_list) -> float:
    """Largest principal angle between the spans of two operator lists."""
    A = np.stack([vectorize(a) for a in A_list], axis=1)
    B = np.stack([vectorize(b) for b in B_list], axis=1)
    return float(np.max(la.subspace_angles(A, B)))


def gram(J_list, M_list) -> np.ndarray:
    return np.array([[np.vdot(j, m) for m in M_list] for j in J_list])
