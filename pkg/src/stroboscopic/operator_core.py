"""Dense operator algebra on a d-level Hilbert space.

Conventions used throughout the package:

* operators are ``(d, d)`` complex numpy arrays;
* vectorization is row-major, so ``vec(A @ X @ B) == kron(A, B.T) @ vec(X)``;
* the Hilbert-Schmidt product is ``(A, B) = Tr(A^dagger B)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

import numpy as np

DEFAULT_TOL = 1e-9


def _as_square(a, name="matrix"):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def hs_inner(a, b):
    """Hilbert-Schmidt product ``Tr(a^dagger b)``, conjugate-linear in ``a``."""
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def vectorize(a):
    return np.ascontiguousarray(_as_square(a)).reshape(-1)


def devectorize(v):
    v = np.asarray(v).reshape(-1)
    d = isqrt(v.size)
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d)


def superop_dim(s):
    """Hilbert-space dimension d of a ``(d^2, d^2)`` superoperator matrix."""
    s = _as_square(s, "superoperator")
    d = isqrt(s.shape[0])
    if d * d != s.shape[0]:
        raise ValueError(f"superoperator size {s.shape[0]} is not a perfect square")
    return d


def apply_superop(s, x):
    return devectorize(np.asarray(s) @ vectorize(x))


def commutator(a, b):
    return a @ b - b @ a


def is_hermitian(a, tol=DEFAULT_TOL):
    a = np.asarray(a)
    return hermiticity_defect(a) <= tol


def hermiticity_defect(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T), initial=0.0))


def hermitian_basis(d):
    """Orthonormal Hermitian basis of the d x d matrices.

    The first element is ``I / sqrt(d)``; then come the symmetric and
    antisymmetric off-diagonal generators for each pair ``j < k`` and the
    d - 1 traceless diagonal ones (generalized Gell-Mann matrices), all
    scaled to unit Hilbert-Schmidt norm.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j / np.sqrt(2)
            asym[k, j] = 1j / np.sqrt(2)
            basis.extend([sym, asym])
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return basis


@dataclass(frozen=True)
class DensityReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    tol: float

    @property
    def passed(self):
        return (
            self.hermiticity_defect <= self.tol
            and self.trace_defect <= self.tol
            and self.min_eigenvalue >= -self.tol
        )

    def __bool__(self):
        return self.passed


def validate_density(rho, tol=DEFAULT_TOL):
    rho = _as_square(rho, "rho")
    herm = hermiticity_defect(rho)
    trace_defect = abs(np.trace(rho) - 1.0)
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    return DensityReport(herm, float(trace_defect), min_eig, tol)


def _ginibre(d, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def random_state(d, seed=None):
    """Full-rank density matrix ``G G^dagger / Tr(G G^dagger)``."""
    g = _ginibre(d, seed)
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_observable(d, seed=None):
    g = _ginibre(d, seed)
    return (g + g.conj().T) / 2


def random_unitary(d, seed=None):
    """Haar-distributed unitary via QR with phase correction."""
    q, r = np.linalg.qr(_ginibre(d, seed))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def hermitize(a):
    return (a + a.conj().T) / 2


def project_unit_trace(a):
    """Hermitian part of ``a`` shifted along the identity to unit trace."""
    h = hermitize(np.asarray(a, dtype=complex))
    d = h.shape[0]
    return h + (1.0 - np.trace(h).real) / d * np.eye(d)


def group_values(values, tol):
    """Cluster sorted real values whose consecutive gaps are <= tol.

    Returns ``(centers, counts)`` with the mean of each cluster, ascending.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        return np.empty(0), np.empty(0, dtype=int)
    breaks = np.flatnonzero(np.diff(v) > tol) + 1
    clusters = np.split(v, breaks)
    centers = np.array([c.mean() for c in clusters])
    counts = np.array([c.size for c in clusters], dtype=int)
    return centers, counts


@dataclass(frozen=True)
class HamiltonianSpec:
    """Hermitian operator H stored by its spectral data.

    ``eigenvalues`` are the distinct levels in increasing order,
    ``multiplicities`` their degeneracies and ``eigenbasis`` a unitary whose
    columns are eigenvectors, grouped level by level in the same order.
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    eigenbasis: np.ndarray | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        n = np.asarray(self.multiplicities).ravel()
        if lam.size == 0 or lam.size != n.size:
            raise ValueError("eigenvalues and multiplicities must be nonempty and equal length")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("eigenvalues must be strictly increasing")
        if np.any(n < 1) or np.any(n != np.round(n)):
            raise ValueError("multiplicities must be positive integers")
        n = n.astype(int)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "multiplicities", n)
        d = int(n.sum())
        if self.eigenbasis is None:
            object.__setattr__(self, "eigenbasis", np.eye(d, dtype=complex))
        else:
            u = np.asarray(self.eigenbasis, dtype=complex)
            if u.shape != (d, d):
                raise ValueError(f"eigenbasis must be {d}x{d}, got {u.shape}")
            if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-8:
                raise ValueError("eigenbasis is not unitary")
            object.__setattr__(self, "eigenbasis", u)

    @classmethod
    def from_dense(cls, h, tol=1e-8):
        h = _as_square(np.asarray(h, dtype=complex), "hamiltonian")
        if hermiticity_defect(h) > DEFAULT_TOL * max(1.0, np.abs(h).max()):
            raise ValueError("hamiltonian is not Hermitian")
        w, u = np.linalg.eigh(hermitize(h))
        centers, counts = group_values(w, tol)
        return cls(centers, counts, u)

    @classmethod
    def from_levels(cls, eigenvalues, multiplicities=None, eigenbasis=None):
        if multiplicities is None:
            multiplicities = np.ones(len(eigenvalues), dtype=int)
        return cls(eigenvalues, multiplicities, eigenbasis)

    @property
    def dim(self):
        return int(self.multiplicities.sum())

    @property
    def num_levels(self):
        return int(self.eigenvalues.size)

    @property
    def diagonal(self):
        """Eigenvalue of each eigenbasis column, with repetitions."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    @property
    def matrix(self):
        u = self.eigenbasis
        return (u * self.diagonal) @ u.conj().T
