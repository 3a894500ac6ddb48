"""
Worked examples with closed-form steady states and conserved quantities.

Each constructor returns a :class:`CatalogEntry` whose analytic operators are
exact for the model (or, for truncated bosonic models, exact away from the
Fock cutoff). They serve as oracles for the numerical pipeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .liouvillian import Model
from .operator_core import (PAULI, HilbertSpace, annihilation, embed, number,
                            operator_power)

__all__ = [
    "CatalogEntry", "dephasing", "two_qubit", "driven_two_qubit", "d_photon",
    "photon_loss", "residue_projectors", "j_coefficient", "coherent_steady",
    "coherent_diagonal", "double_factorial", "falling_factorial", "CATALOG",
    "two_qubit_operators",
]


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    model: Model
    analytic_M: tuple
    analytic_J: tuple
    labels: tuple
    notes: tuple = ()
    interior_margin: int = 0
    extras: dict = field(default_factory=dict)


def double_factorial(m: int) -> int:
    if m < 0 or int(m) != m:
        raise ValueError(f"double factorial needs a nonnegative integer, got {m}")
    out = 1
    for k in range(int(m), 0, -2):
        out *= k
    return out


def falling_factorial(x, n: int):
    """``(x)_n = x (x-1) ... (x-n+1)`` with ``(x)_0 = 1``."""
    if n < 0 or int(n) != n:
        raise ValueError(f"falling factorial length must be a nonnegative integer, got {n}")
    out = 1 if isinstance(x, (int, np.integer)) else 1.0
    for k in range(int(n)):
        out *= x - k
    return out


def two_qubit_operators() -> dict[str, np.ndarray]:
    space = HilbertSpace.qubits(2)
    ops = {"I": space.identity()}
    for site in (0, 1):
        for p in "XYZ":
            ops[f"{p}{site + 1}"] = embed(site, PAULI[p], space)
    return ops


def dephasing() -> CatalogEntry:
    """Single qubit with jump ``Z`` and no Hamiltonian."""
    space = HilbertSpace.qubits(1)
    Z = PAULI["Z"].copy()
    model = Model(space, None, [Z], name="dephasing")
    M = tuple(np.diag(v).astype(complex) for v in ([1, 0], [0, 1]))
    return CatalogEntry(model, M, tuple(m.copy() for m in M), labels=("0", "1"),
                        notes=("populations in the Z basis are conserved",))


def _two_qubit_M(o):
    I = o["I"]
    M00 = 0.25 * (I + o["Z1"]) @ (I - o["Z2"])
    M11 = 0.25 * (I - o["Z1"]) @ (I + o["Z2"])
    M01 = 0.25 * (o["X1"] + 1j * o["Y1"]) @ (o["X2"] - 1j * o["Y2"])
    return M00, M01, M01.conj().T, M11


def _two_qubit_J(o):
    I = o["I"]
    J00 = 0.5 * (I + o["Z1"])
    J01 = 0.5 * (o["X1"] + 1j * o["Y1"]) @ o["X2"]
    return J00, J01, J01.conj().T, I - J00


def _two_qubit_jump(o):
    return 0.5 * (o["I"] - o["Z1"] @ o["Z2"]) @ o["X2"]


def two_qubit() -> CatalogEntry:
    """Two qubits with the single jump ``(I - Z1 Z2) X2 / 2``; a decoherence-free qubit."""
    o = two_qubit_operators()
    model = Model(HilbertSpace.qubits(2), None, [_two_qubit_jump(o)], name="two_qubit")
    return CatalogEntry(model, _two_qubit_M(o), _two_qubit_J(o),
                        labels=("00", "01", "10", "11"),
                        notes=("steady space spanned by |Psi_p><Psi_q|",))


def driven_two_qubit(omega: float) -> CatalogEntry:
    """:func:`two_qubit` plus ``H = omega X2``; a noiseless subsystem for ``omega != 0``."""
    o = two_qubit_operators()
    I = o["I"]
    zeta = math.sqrt(2 * omega**4 + 4 * omega**2 + 1)
    M00, M01, _, M11 = _two_qubit_M(o)
    Mb00 = (M00 + omega / 2 * (I + o["Z1"]) @ (omega * I + o["Y2"])) / zeta
    Mb11 = (M11 + omega / 2 * (I - o["Z1"]) @ (omega * I - o["Y2"])) / zeta
    Mb01 = (M01 + omega / 2 * (o["X1"] + 1j * o["Y1"]) @ (omega * o["X2"] - 1j * o["Z2"])) / zeta
    scale = zeta / (2 * omega**2 + 1)
    J = tuple(scale * j for j in _two_qubit_J(o))
    model = Model(HilbertSpace.qubits(2), omega * o["X2"], [_two_qubit_jump(o)],
                  name="driven_two_qubit", parameters={"omega": float(omega)})
    factor = np.array([[1 + omega**2, 1j * omega], [-1j * omega, omega**2]]) / (1 + 2 * omega**2)
    U = 0.5 * (I + o["Z1"] @ (o["X2"] - I) + o["X2"])
    return CatalogEntry(model, (Mb00, Mb01, Mb01.conj().T, Mb11), J,
                        labels=("00", "01", "10", "11"),
                        notes=("factor state T in the frame of U",),
                        extras={"zeta": zeta, "factor_state": factor, "frame": U})


def residue_projectors(d: int, dim: int) -> list[np.ndarray]:
    """Projectors onto Fock levels ``n = mu (mod d)``, ``mu = 0..d-1``."""
    n = np.arange(dim)
    return [np.diag((n % d == mu).astype(complex)) for mu in range(d)]


def j_coefficient(mu: int, nu: int, n: int, d: int) -> float:
    """Coefficient function of the off-diagonal d-photon conserved quantity.

    Evaluated as a running product of ratios of falling factorials so that
    nothing overflows at large ``n``. ``n`` must be ``mu`` mod ``d``.
    """
    if (n - mu) % d or n < mu:
        raise ValueError(f"n={n} is not of the form d*k + mu with d={d}, mu={mu}")
    r = nu - mu
    out = 1.0
    for p in range((n - mu) // d):
        a = falling_factorial(float(d * p + nu), r)
        b = falling_factorial(float(d * p + nu + d), r)
        out *= 2 * a / (a + b)
    return out


def d_photon(d: int, dim: int) -> CatalogEntry:
    """Single mode with ``d``-photon absorption, jump ``a^d`` on a truncated Fock space."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    if dim <= d * d + d:
        raise ValueError(f"Fock truncation {dim} too small for d={d}; need dim > {d * d + d}")
    space = HilbertSpace.fock(dim)
    a = annihilation(dim)
    F = operator_power(a, d)
    model = Model(space, None, [F], name="d_photon" if d > 1 else "photon_loss",
                  parameters={"d": d, "dim": dim})
    Pi = residue_projectors(d, dim)
    M, J, labels = [], [], []
    for mu in range(d):
        for nu in range(d):
            Mmn = np.zeros((dim, dim), dtype=complex)
            Mmn[mu, nu] = 1.0
            M.append(Mmn)
            labels.append(f"{mu}{nu}")
            lo, hi = min(mu, nu), max(mu, nu)
            jd = np.zeros(dim)
            for n in range(lo, dim, d):
                jd[n] = j_coefficient(lo, hi, n, d)
            Jmn = np.diag(jd).astype(complex) @ Pi[lo] @ operator_power(a, hi - lo)
            Jmn /= math.sqrt(falling_factorial(hi, hi - lo))
            J.append(Jmn if mu <= nu else Jmn.conj().T)
    return CatalogEntry(model, tuple(M), tuple(J), labels=tuple(labels),
                        notes=("conserved quantities exact away from the Fock cutoff",),
                        interior_margin=2 * d,
                        extras={"projectors": Pi, "number": number(dim)})


def photon_loss(dim: int) -> CatalogEntry:
    return d_photon(1, dim)


def coherent_steady(d: int, alpha: complex, max_terms: int = 10**4) -> np.ndarray:
    """Asymptotic ``d x d`` coefficient matrix for an initial coherent state.

    Sums the series for each coefficient directly, in log space, until the
    next term is below ``1e-14`` of the running sum past the peak.

    Raises
    ------
    RuntimeError
        If a series has not converged within ``max_terms`` terms.
    """
    x = abs(alpha) ** 2
    theta = float(np.angle(alpha)) if alpha != 0 else 0.0
    rho = np.zeros((d, d), dtype=complex)
    if x == 0:
        rho[0, 0] = 1.0
        return rho
    logx = math.log(x)
    for mu in range(d):
        for nu in range(mu, d):
            r = nu - mu
            total = 0.0
            logj = 0.0
            k = 0
            while True:
                n = d * k + mu
                logt = logj + n * logx - gammaln(n + 1) - x + r * 0.5 * logx
                t = math.exp(logt)
                total += t
                if n > x and t < 1e-14 * total:
                    break
                k += 1
                if k > max_terms:
                    raise RuntimeError(f"series for rho_{mu}{nu} did not converge in {max_terms} terms")
                a = falling_factorial(float(d * (k - 1) + nu), r)
                b = falling_factorial(float(d * (k - 1) + nu + d), r)
                logj += math.log(2 * a / (a + b))
            val = total / math.sqrt(falling_factorial(nu, r)) * np.exp(-1j * theta * r)
            rho[mu, nu] = val
            rho[nu, mu] = np.conj(val)
    return rho


def coherent_diagonal(d: int, alpha: complex) -> np.ndarray:
    """Diagonal of :func:`coherent_steady` from its closed discrete-Fourier form."""
    x = abs(alpha) ** 2
    nus = np.arange(d)
    w = np.exp(2j * np.pi * nus / d)
    terms = np.exp(x * (w - 1))
    return np.array([np.real(np.sum(np.exp(-2j * np.pi * mu * nus / d) * terms)) / d
                     for mu in range(d)])


CATALOG = {
    "dephasing": dephasing,
    "two_qubit": two_qubit,
    "driven_two_qubit": driven_two_qubit,
    "d_photon": d_photon,
}
