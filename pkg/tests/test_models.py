import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import i0

from lindbladkit.asymptotics import asymptotic_project, decompose
from lindbladkit.liouvillian import Liouvillian, heisenberg_rhs, lindblad_rhs
from lindbladkit.models import (CATALOG, coherent_diagonal, coherent_steady, d_photon,
                                dephasing, double_factorial, driven_two_qubit,
                                falling_factorial, j_coefficient, photon_loss,
                                residue_projectors, two_qubit)
from lindbladkit.operator_core import coherent_ket
from lindbladkit.structure import conserved_residual

from helpers import gram, span_angle


def bessel_i0_series(x, terms=200):
    # sum_k (x/2)^(2k) / (k!)^2, summed in log space
    return sum(math.exp(2 * k * math.log(x / 2) - 2 * math.lgamma(k + 1)) for k in range(terms)) if x else 1.0


def test_factorials():
    assert double_factorial(0) == 1
    assert double_factorial(1) == 1
    assert double_factorial(7) == 105
    assert double_factorial(8) == 384
    assert falling_factorial(5, 3) == 60
    assert falling_factorial(5, 0) == 1
    assert falling_factorial(2.5, 2) == pytest.approx(3.75)
    with pytest.raises(ValueError):
        double_factorial(-1)
    with pytest.raises(ValueError):
        falling_factorial(3, -1)


def test_j_coefficient_reduces_to_double_factorial_ratio_for_d2():
    for n in range(0, 60, 2):
        expected = double_factorial(n - 1) / double_factorial(n) if n else 1.0
        assert j_coefficient(0, 1, n, 2) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        j_coefficient(0, 1, 3, 2)


def test_j_coefficient_does_not_overflow():
    assert np.isfinite(j_coefficient(0, 2, 3 * 400, 3))


@pytest.mark.parametrize("entry", [dephasing(), two_qubit(), driven_two_qubit(0.4),
                                   driven_two_qubit(2.5)], ids=lambda e: e.model.name)
def test_analytic_operators_are_exact(entry):
    for M in entry.analytic_M:
        assert np.max(np.abs(lindblad_rhs(entry.model, M))) < 1e-12
    for J in entry.analytic_J:
        assert np.max(np.abs(heisenberg_rhs(entry.model, J))) < 1e-12
    D = len(entry.analytic_M)
    assert np.allclose(gram(entry.analytic_M, entry.analytic_M), np.eye(D), atol=1e-12)
    assert np.allclose(gram(entry.analytic_J, entry.analytic_M), np.eye(D), atol=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_d_photon_analytic_operators(d):
    entry = d_photon(d, 30)
    for M in entry.analytic_M:
        assert np.max(np.abs(lindblad_rhs(entry.model, M))) == 0
    for J in entry.analytic_J:
        assert conserved_residual(J, entry.model, interior_margin=2 * d) < 1e-12
    assert np.allclose(gram(entry.analytic_J, entry.analytic_M), np.eye(d * d), atol=1e-12)
    assert len(entry.analytic_M) == d * d


def test_d_photon_rejects_small_truncation():
    with pytest.raises(ValueError, match="too small"):
        d_photon(3, 12)
    with pytest.raises(ValueError):
        d_photon(0, 10)


def test_photon_loss_has_vacuum_steady_state():
    dec = decompose(Liouvillian(photon_loss(10).model))
    assert dec.dim == 1
    assert np.isclose(abs(dec.steady[0][0, 0]), 1)


def test_driven_model_reduces_to_undriven_at_zero_drive():
    a, b = driven_two_qubit(0.0), two_qubit()
    for x, y in zip(a.analytic_M, b.analytic_M):
        assert np.allclose(x, y)
    for x, y in zip(a.analytic_J, b.analytic_J):
        assert np.allclose(x, y)


def test_driven_model_numeric_span_matches():
    entry = driven_two_qubit(1.0)
    dec = decompose(Liouvillian(entry.model))
    assert span_angle(dec.steady, entry.analytic_M) < 1e-8


def test_residue_projectors_partition_identity():
    P = residue_projectors(3, 10)
    assert np.allclose(sum(P), np.eye(10))
    assert np.allclose(np.diag(P[1]), [0, 1, 0, 0, 1, 0, 0, 1, 0, 0])


def test_dephasing_formula_for_plus_state():
    dec = decompose(Liouvillian(dephasing().model))
    plus = np.full((2, 2), 0.5)
    assert np.allclose(asymptotic_project(dec, plus), np.eye(2) / 2)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 2.0, 3.5])
def test_coherent_steady_d2_closed_form(alpha):
    rho = coherent_steady(2, alpha)
    x = alpha ** 2
    assert rho[0, 0] == pytest.approx(0.5 * (1 + math.exp(-2 * x)), abs=1e-13)
    assert rho[0, 1] == pytest.approx(alpha * math.exp(-x) * bessel_i0_series(x), abs=1e-13)
    assert rho[0, 1] == pytest.approx(alpha * math.exp(-x) * i0(x), abs=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_coherent_diagonal_matches_series(d):
    for alpha in (0.5, 1.7, 3.0):
        assert np.allclose(np.diag(coherent_steady(d, alpha)).real, coherent_diagonal(d, alpha),
                           atol=1e-13)


def test_coherent_steady_vacuum_and_large_alpha():
    assert np.allclose(coherent_steady(3, 0), np.diag([1, 0, 0]))
    assert np.allclose(np.diag(coherent_steady(3, 8.0)).real, 1 / 3, atol=1e-10)


@given(st.floats(0.05, 5.0), st.floats(-np.pi, np.pi), st.integers(1, 4))
def test_coherent_steady_is_a_density_matrix_with_phase_encoding(r, phi, d):
    rho = coherent_steady(d, r)
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
    assert np.linalg.eigvalsh(rho)[0] > -1e-12
    p = np.diag(rho).real
    assert np.all(np.abs(rho) ** 2 <= np.outer(p, p) + 1e-12)
    rotated = coherent_steady(d, r * np.exp(1j * phi))
    mu, nu = np.indices((d, d))
    assert np.allclose(rotated, rho * np.exp(-1j * phi * (nu - mu)), atol=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_coherent_steady_matches_numeric_projection(d):
    dim = 30
    dec = decompose(Liouvillian(d_photon(d, dim).model), rotating=False, gap=False)
    for alpha in (0.5, 1.0 + 0.5j, 2.0):
        psi, tail = coherent_ket(alpha, dim)
        assert tail < 1e-12
        out = asymptotic_project(dec, np.outer(psi, psi.conj()))
        assert np.allclose(out[:d, :d], coherent_steady(d, alpha), atol=1e-6)
        assert np.max(np.abs(out[d:, :])) < 1e-10


def test_catalog_names():
    assert set(CATALOG) == {"dephasing", "two_qubit", "driven_two_qubit", "d_photon"}
