import numpy as np
import pytest

from lindbladkit.liouvillian import (Liouvillian, Model, adjoint_apply, apply, build_adjoint,
                                     build_liouvillian, dissipation_gap, heisenberg_rhs,
                                     lindblad_rhs, spectrum)
from lindbladkit.models import d_photon, dephasing, two_qubit
from lindbladkit.operator_core import PAULI, HilbertSpace, random_density_matrix, random_operator


def test_matrix_matches_operator_form(rng):
    model = two_qubit().model
    L = Liouvillian(model)
    rho = random_density_matrix(4, rng)
    assert np.allclose(apply(L, rho), lindblad_rhs(model, rho))


def test_adjoint_matrix_is_conjugate_transpose(rng):
    for entry in (two_qubit(), d_photon(2, 7)):
        L = Liouvillian(entry.model)
        assert np.allclose(L.adjoint_matrix, L.matrix.conj().T)
        X = random_operator(entry.model.dim, rng)
        assert np.allclose(adjoint_apply(L, X), heisenberg_rhs(entry.model, X))


def test_dephasing_matrix_by_hand():
    # L(rho) = 2 Z rho Z - 2 rho kills coherences at rate 4
    L = Liouvillian(dephasing().model)
    assert np.allclose(L.matrix, np.diag([0, -4, -4, 0]))


def test_model_rejects_bad_input():
    space = HilbertSpace.qubits(1)
    with pytest.raises(ValueError, match="Hermitian"):
        Model(space, np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError, match="dimension"):
        Model(space, None, [np.eye(3)])
    with pytest.raises(ValueError, match="non-finite"):
        Model(space, np.array([[np.nan, 0], [0, 0]]))


def test_model_operators_are_read_only():
    model = dephasing().model
    with pytest.raises(ValueError):
        model.jumps[0][0, 0] = 5
    L = build_liouvillian(model)
    with pytest.raises(ValueError):
        L.matrix[0, 0] = 1


def test_spectrum_dephasing_and_unitary():
    s = spectrum(Liouvillian(dephasing().model))
    assert np.allclose(s.eigenvalues, [0, 0, -4, -4])
    assert s.gap == pytest.approx(4)
    u = spectrum(Liouvillian(Model(HilbertSpace.qubits(1), PAULI["Z"])))
    assert np.allclose(sorted(u.eigenvalues.imag), [-2, 0, 0, 2])
    assert u.gap == np.inf


def test_spectrum_vectors_are_eigenvectors():
    L = Liouvillian(two_qubit().model)
    s = spectrum(L)
    for k, lam in enumerate(s.eigenvalues):
        assert np.allclose(L.matrix @ s.right[:, k], lam * s.right[:, k], atol=1e-10)
        assert np.allclose(L.adjoint_matrix @ s.left[:, k], np.conj(lam) * s.left[:, k], atol=1e-10)


def test_spectrum_ordering():
    s = spectrum(Liouvillian(d_photon(2, 8).model))
    re = np.round(s.eigenvalues.real, 8)
    assert np.all(np.diff(re) <= 0)


def test_gap_needs_tolerance_for_raw_values():
    with pytest.raises(ValueError):
        dissipation_gap(np.array([0, -1]))
    assert dissipation_gap(np.array([0, -1, -3 + 1j]), 1e-9) == 1


def test_build_adjoint_standalone():
    model = two_qubit().model
    assert np.allclose(build_adjoint(model), Liouvillian(model).matrix.conj().T)
