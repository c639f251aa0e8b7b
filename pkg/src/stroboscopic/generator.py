"""Gaussian dephasing generator and the semigroup it generates.

The generator acts as ``L(rho) = -1/2 [H, [H, rho]]``. Three evolution
engines are provided and are expected to agree to near machine precision:

* :func:`evolve_exact` - closed-form coherence decay in the eigenbasis of H;
* :func:`evolve_expm` - dense matrix exponential of the superoperator;
* :func:`evolve_quadrature` - Gauss-Hermite average of unitary conjugations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .operator_core import (
    HamiltonianSpec,
    devectorize,
    group_values,
    superop_dim,
    vectorize,
)

DEFAULT_GROUP_TOL = 1e-8
DEFAULT_QUADRATURE_NODES = 64


def as_hamiltonian(h):
    if isinstance(h, HamiltonianSpec):
        return h
    return HamiltonianSpec.from_dense(h)


def build_generator(h):
    """Superoperator matrix of ``rho -> -1/2 [H, [H, rho]]``.

    In the row-major convention this is
    ``-1/2 (H^2 (x) I + I (x) (H^2)^T) + H (x) H^T``.
    """
    hmat = as_hamiltonian(h).matrix
    d = hmat.shape[0]
    eye = np.eye(d)
    h2 = hmat @ hmat
    return -0.5 * (np.kron(h2, eye) + np.kron(eye, h2.T)) + np.kron(hmat, hmat.T)


def adjoint_generator(superop):
    """Adjoint with respect to the Hilbert-Schmidt product."""
    return np.asarray(superop).conj().T


@dataclass(frozen=True)
class SpectrumTable:
    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    tol: float = DEFAULT_GROUP_TOL

    @property
    def total(self):
        return int(self.multiplicities.sum())

    def as_dict(self):
        return {float(v): int(n) for v, n in zip(self.eigenvalues, self.multiplicities)}

    def to_json(self):
        return [
            {"eigenvalue": float(v), "multiplicity": int(n)}
            for v, n in zip(self.eigenvalues, self.multiplicities)
        ]


def generator_spectrum(h, tol=DEFAULT_GROUP_TOL):
    """Eigenvalues ``-1/2 (l_i - l_j)^2`` of L with multiplicities ``n_i n_j``."""
    h = as_hamiltonian(h)
    lam, n = h.eigenvalues, h.multiplicities
    nu = -0.5 * np.subtract.outer(lam, lam) ** 2
    weight = np.outer(n, n)
    order = np.argsort(nu, axis=None, kind="stable")
    nu_sorted = nu.ravel()[order]
    w_sorted = weight.ravel()[order]
    breaks = np.flatnonzero(np.diff(nu_sorted) > tol) + 1
    eigenvalues = np.array([c.mean() for c in np.split(nu_sorted, breaks)])
    mults = np.array([c.sum() for c in np.split(w_sorted, breaks)], dtype=int)
    # an exact zero stays exactly zero
    eigenvalues[np.abs(eigenvalues) <= tol] = 0.0
    return SpectrumTable(eigenvalues, mults, tol)


def _check_time(t, strict=False):
    if t < 0 or (strict and t == 0):
        bound = "positive" if strict else "nonnegative"
        raise ValueError(f"time must be {bound}, got {t}")


def evolve_exact(h, rho0, t):
    """``Phi(t) rho0`` by damping coherences as ``exp(-t (l_i - l_j)^2 / 2)``."""
    _check_time(t)
    h = as_hamiltonian(h)
    u = h.eigenbasis
    lam = h.diagonal
    rho_eig = u.conj().T @ np.asarray(rho0, dtype=complex) @ u
    damping = np.exp(-0.5 * t * np.subtract.outer(lam, lam) ** 2)
    return u @ (rho_eig * damping) @ u.conj().T


def evolve_expm(superop, rho0, t):
    _check_time(t)
    return devectorize(expm(t * np.asarray(superop)) @ vectorize(np.asarray(rho0, dtype=complex)))


def evolve_quadrature(h, rho0, t, nodes=DEFAULT_QUADRATURE_NODES):
    """Gauss-Hermite evaluation of the Gaussian average of ``e^{-iHs} rho e^{iHs}``.

    With ``s = sqrt(2 t) u`` the Gaussian weight becomes ``exp(-u^2)/sqrt(pi)``.
    The unitaries are formed by dense exponentiation, independently of the
    eigenbasis used by :func:`evolve_exact`.
    """
    _check_time(t, strict=True)
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    hmat = as_hamiltonian(h).matrix
    rho0 = np.asarray(rho0, dtype=complex)
    u_nodes, weights = np.polynomial.hermite.hermgauss(nodes)
    out = np.zeros_like(rho0)
    for u, w in zip(u_nodes, weights):
        s = np.sqrt(2.0 * t) * u
        unitary = expm(-1j * s * hmat)
        out += w * (unitary @ rho0 @ unitary.conj().T)
    return out / np.sqrt(np.pi)


def kernel_dimension(superop, tol=1e-9):
    """Number of singular values at or below ``tol * max(sigma_max, 1)``.

    The unit floor keeps roundoff-sized generators (H proportional to the
    identity in a rotated basis) from looking full rank.
    """
    s = np.linalg.svd(np.asarray(superop), compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s <= tol * max(s[0], 1.0)))


def superop_eigenvalues(superop, tol=DEFAULT_GROUP_TOL):
    """Distinct eigenvalues of a Hermitian superoperator with multiplicities."""
    s = np.asarray(superop)
    w = np.linalg.eigvalsh((s + s.conj().T) / 2)
    return group_values(w, tol)


__all__ = [
    "SpectrumTable",
    "adjoint_generator",
    "as_hamiltonian",
    "build_generator",
    "evolve_exact",
    "evolve_expm",
    "evolve_quadrature",
    "generator_spectrum",
    "kernel_dimension",
    "superop_dim",
    "superop_eigenvalues",
]
