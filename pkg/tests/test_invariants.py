"""Structural properties checked on randomized instances of every catalog model.

Each instance is a catalog model seen in a random basis with all rates and
energies rescaled, which leaves every property below intact.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from lindbladkit.asymptotics import asymptotic_project, decompose, null_space
from lindbladkit.evolve import Propagator, trace_distance
from lindbladkit.liouvillian import Liouvillian, apply, spectrum
from lindbladkit.operator_core import random_density_matrix, random_operator

from helpers import catalog_models, random_unitary, rotated

MODELS = catalog_models()
N_EXAMPLES = 50

seeds = st.integers(0, 2**32 - 1)
scales = st.floats(0.2, 5.0)
instances = settings(max_examples=N_EXAMPLES)
by_model = pytest.mark.parametrize("name", sorted(MODELS))


def instance(name, seed, scale):
    entry = MODELS[name]
    rng = np.random.default_rng(seed)
    model = rotated(entry.model, random_unitary(entry.model.dim, rng), scale)
    return entry, Liouvillian(model), rng


@by_model
@instances
@given(seed=seeds, scale=scales)
def test_spectrum_is_nonpositive(name, seed, scale):
    _, L, _ = instance(name, seed, scale)
    vals = spectrum(L, vectors=False).eigenvalues
    assert np.max(vals.real) <= L.zero_tol()


@by_model
@instances
@given(seed=seeds, scale=scales)
def test_spectrum_is_closed_under_conjugation(name, seed, scale):
    _, L, _ = instance(name, seed, scale)
    vals = spectrum(L, vectors=False).eigenvalues
    cost = np.abs(vals[:, None] - np.conj(vals)[None, :])
    rows, cols = linear_sum_assignment(cost)
    assert np.max(cost[rows, cols]) < 1e-6 * max(1.0, L.scale)


@by_model
@instances
@given(seed=seeds, scale=scales)
def test_trace_is_annihilated(name, seed, scale):
    _, L, rng = instance(name, seed, scale)
    X = random_operator(L.dim, rng)
    assert abs(np.trace(apply(L, X))) < 1e-10 * max(1.0, L.scale) * np.max(np.abs(X)) * L.dim
    # equivalently, the identity is conserved
    assert np.max(np.abs(L.adjoint_matrix @ np.eye(L.dim).reshape(-1))) < L.zero_tol()


@by_model
@instances
@given(seed=seeds, scale=scales)
def test_hermiticity_is_preserved(name, seed, scale):
    _, L, rng = instance(name, seed, scale)
    X = random_operator(L.dim, rng)
    lhs = apply(L, X.conj().T)
    rhs = apply(L, X).conj().T
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, L.scale) * max(1.0, np.max(np.abs(X)))


@by_model
@instances
@given(seed=seeds, scale=scales)
def test_null_space_dimensions_agree(name, seed, scale):
    entry, L, _ = instance(name, seed, scale)
    right, left, _ = null_space(L.matrix, 1e-9)
    right_adj, _, _ = null_space(L.adjoint_matrix, 1e-9)
    D = len(entry.analytic_M)
    assert right.shape[1] == left.shape[1] == right_adj.shape[1] == D


@by_model
@instances
@given(seed=seeds, scale=scales)
def test_projection_is_idempotent(name, seed, scale):
    _, L, rng = instance(name, seed, scale)
    dec = decompose(L, rotating=False, gap=False)
    rho = random_density_matrix(L.dim, rng)
    once = asymptotic_project(dec, rho, validate=False)
    twice = asymptotic_project(dec, once, validate=False)
    assert np.max(np.abs(twice - once)) < 1e-9
    assert np.trace(once) == pytest.approx(1, abs=1e-9)


@by_model
@instances
@given(seed=seeds, scale=scales)
def test_conserved_quantities_pair_with_steady_states(name, seed, scale):
    _, L, _ = instance(name, seed, scale)
    dec = decompose(L, rotating=False, gap=False)
    G = np.array([[np.vdot(J, M) for M in dec.steady] for J in dec.conserved])
    assert np.max(np.abs(G - np.eye(dec.dim))) < 1e-9
    for J in dec.conserved:
        assert np.max(np.abs(L.adjoint_matrix @ J.reshape(-1))) < 1e-8 * max(1.0, L.scale)


@by_model
@instances
@given(seed=seeds, scale=scales, t=st.floats(0.01, 3.0))
def test_trace_distance_contracts(name, seed, scale, t):
    _, L, rng = instance(name, seed, scale)
    rho = random_density_matrix(L.dim, rng)
    sigma = random_density_matrix(L.dim, rng, rank=1)
    P = Propagator(L, t)
    assert trace_distance(P(rho), P(sigma)) <= trace_distance(rho, sigma) + 1e-10
