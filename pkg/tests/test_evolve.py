import numpy as np
import pytest
import scipy.linalg as la

from lindbladkit.asymptotics import asymptotic_project, decompose
from lindbladkit.evolve import (Propagator, choi_matrix, convergence_profile,
                                heisenberg_propagate, late_time_slope, propagate,
                                trace_distance, verification_horizon)
from lindbladkit.liouvillian import Liouvillian
from lindbladkit.models import d_photon, dephasing, driven_two_qubit, two_qubit
from lindbladkit.operator_core import random_density_matrix, random_operator


def test_zero_time_is_identity(rng):
    L = Liouvillian(two_qubit().model)
    rho = random_density_matrix(4, rng)
    assert np.allclose(propagate(L, rho, 0.0), rho)


def test_negative_time_rejected():
    L = Liouvillian(dephasing().model)
    with pytest.raises(ValueError, match="nonnegative"):
        propagate(L, np.eye(2) / 2, -1.0)


def test_dephasing_coherence_decays_at_rate_four():
    L = Liouvillian(dephasing().model)
    plus = np.full((2, 2), 0.5)
    for t in (0.1, 0.5, 1.3):
        out = propagate(L, plus, t)
        assert out[0, 1] == pytest.approx(0.5 * np.exp(-4 * t), rel=1e-12)
        assert out[0, 0] == pytest.approx(0.5)


def test_semigroup_and_trace(rng):
    L = Liouvillian(driven_two_qubit(0.8).model)
    for t, s in ((0.3, 0.9), (1.1, 2.0)):
        lhs = Propagator(L, t + s).matrix
        rhs = Propagator(L, t).matrix @ Propagator(L, s).matrix
        assert np.max(np.abs(lhs - rhs)) < 1e-9
    rho = random_density_matrix(4, rng)
    assert np.trace(propagate(L, rho, 2.7)) == pytest.approx(1, abs=1e-10)


def test_heisenberg_identity_and_duality(rng):
    L = Liouvillian(d_photon(2, 8).model)
    assert np.allclose(heisenberg_propagate(L, np.eye(8), 3.0), np.eye(8))
    X = random_operator(8, rng)
    rho = random_density_matrix(8, rng)
    t = 0.7
    assert np.vdot(X, propagate(L, rho, t)) == pytest.approx(
        np.vdot(heisenberg_propagate(L, X, t), rho), abs=1e-10)


def test_heisenberg_limit_is_conserved_quantity():
    entry = two_qubit()
    L = Liouvillian(entry.model)
    dec = decompose(L)
    J01 = entry.analytic_J[1]
    late = heisenberg_propagate(L, J01, 40.0)
    assert np.allclose(late, J01, atol=1e-10)
    # a generic operator flows to its component along the conserved quantities
    X = np.zeros((4, 4), dtype=complex)
    X[0, 3] = 1.0
    limit = sum(np.vdot(M, X).conj() * J for M, J in zip(dec.steady, dec.conserved))
    assert np.allclose(heisenberg_propagate(L, X, 40.0), limit, atol=1e-10)


@pytest.mark.parametrize("entry", [dephasing(), two_qubit(), driven_two_qubit(1.0),
                                   d_photon(2, 10)], ids=lambda e: e.model.name)
def test_propagation_converges_to_projection(entry, rng):
    L = Liouvillian(entry.model)
    dec = decompose(L)
    T = verification_horizon(dec.gap)
    rho = random_density_matrix(entry.model.dim, rng)
    assert np.max(np.abs(propagate(L, rho, T) - asymptotic_project(dec, rho))) < 1e-6


def test_horizon_for_undamped_dynamics():
    assert verification_horizon(np.inf) is None
    assert verification_horizon(2.0) == 15.0


def test_convergence_profile_dephasing_slope(rng):
    L = Liouvillian(dephasing().model)
    dec = decompose(L)
    rho = random_density_matrix(2, rng)
    prof = convergence_profile(L, rho, np.linspace(0.5, 4, 8), dec)
    dists = [d for _, d in prof]
    assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    assert late_time_slope(prof) == pytest.approx(-4, abs=0.4)
    steady = asymptotic_project(dec, rho)
    assert all(d < 1e-10 for _, d in convergence_profile(L, steady, [0, 1, 2], dec))
    with pytest.raises(ValueError, match="sorted"):
        convergence_profile(L, rho, [2, 1], dec)


def test_convergence_profile_two_photon_slope(rng):
    L = Liouvillian(d_photon(2, 30).model)
    dec = decompose(L)
    rho = random_density_matrix(30, rng)
    times = np.linspace(5 / dec.gap, 15 / dec.gap, 8)
    prof = convergence_profile(L, rho, times, dec)
    assert late_time_slope(prof) == pytest.approx(-dec.gap, rel=0.1)


def test_choi_matrix_is_positive_for_small_models():
    for entry in (dephasing(), two_qubit(), driven_two_qubit(0.5)):
        L = Liouvillian(entry.model)
        for t in (0.1, 1.0, 5.0):
            C = choi_matrix(L, t)
            assert la.eigvalsh(0.5 * (C + C.conj().T))[0] > -1e-8
            assert np.trace(C) == pytest.approx(1)


def test_trace_distance_basic():
    a = np.diag([1.0, 0])
    b = np.diag([0, 1.0])
    assert trace_distance(a, b) == pytest.approx(1)
    assert trace_distance(a, a) == 0
