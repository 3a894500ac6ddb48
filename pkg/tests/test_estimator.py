import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lindbladkit.asymptotics import asymptotic_project, decompose
from lindbladkit.estimator import AsymptoticProjector
from lindbladkit.liouvillian import Liouvillian, Model
from lindbladkit.models import dephasing, driven_two_qubit, two_qubit
from lindbladkit.operator_core import PAULI, HilbertSpace, random_density_matrix


def test_params_and_clone():
    est = AsymptoticProjector(tol=1e-8, rotating=False)
    assert est.get_params() == {"tol": 1e-8, "tol_zero": None, "rotating": False, "validate": True}
    twin = clone(est)
    assert twin is not est and twin.get_params() == est.get_params()
    est.set_params(validate=False)
    assert est.validate is False


def test_fit_sets_attributes():
    est = AsymptoticProjector().fit(two_qubit().model)
    assert est.n_steady_ == 4
    assert est.n_features_in_ == 4
    assert est.gap_ > 0
    assert est.frequencies_.shape == (0,)


def test_fit_accepts_liouvillian_and_rejects_arrays():
    L = Liouvillian(dephasing().model)
    assert AsymptoticProjector().fit(L).liouvillian_ is L
    with pytest.raises(TypeError, match="Model or Liouvillian"):
        AsymptoticProjector().fit(np.eye(4))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        AsymptoticProjector().transform(np.eye(2) / 2)


def test_batch_shapes_agree(rng):
    model = driven_two_qubit(1.0).model
    est = AsymptoticProjector().fit(model)
    dec = decompose(Liouvillian(model))
    states = np.stack([random_density_matrix(4, rng) for _ in range(3)])
    ref = np.stack([asymptotic_project(dec, r) for r in states])
    assert np.allclose(est.transform(states), ref, atol=1e-10)
    assert np.allclose(est.transform(states[1]), ref[1], atol=1e-10)
    flat = est.transform(states.reshape(3, 16))
    assert flat.shape == (3, 16)
    assert np.allclose(flat.reshape(3, 4, 4), ref, atol=1e-10)
    assert est.coefficients(states).shape == (3, 4)
    assert est.coefficients(states[0]).shape == (4,)
    with pytest.raises(ValueError, match="expected states"):
        est.transform(np.zeros((3, 5, 5)))


def test_predict_follows_the_limit_cycle():
    est = AsymptoticProjector().fit(Model(HilbertSpace.qubits(1), PAULI["Z"]))
    plus = np.full((2, 2), 0.5)
    assert np.allclose(sorted(np.abs(est.frequencies_)), [2, 2])
    for t in (0.0, 0.4, 1.3):
        out = est.predict(plus, t)
        assert out[0, 1] == pytest.approx(0.5 * np.exp(-2j * t), abs=1e-10)
    assert np.allclose(est.transform(plus), np.eye(2) / 2)


def test_validation_flag():
    est = AsymptoticProjector().fit(dephasing().model)
    bad = np.array([[1, 0], [0, 1]], dtype=complex)
    with pytest.raises(ValueError):
        est.transform(bad)
    loose = AsymptoticProjector(validate=False).fit(dephasing().model)
    assert np.allclose(loose.transform(bad), bad)
