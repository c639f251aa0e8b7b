"""Index of cyclicity and minimal polynomial of the dephasing generator.

The index of cyclicity is the largest geometric multiplicity among the
eigenvalues of L. It is computed two ways: from the level multiplicities of
H via ``max(kappa, gamma_1, ..., gamma_r)`` and by counting kernel dimensions
of ``nu I - L`` directly. The closed form assumes that the squared gaps of
different index distances never coincide; :func:`resonance_report` detects
spectra where they do.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .generator import (
    DEFAULT_GROUP_TOL,
    as_hamiltonian,
    build_generator,
    generator_spectrum,
    kernel_dimension,
)
from .operator_core import group_values, superop_dim


class NotDiagonalizableError(ValueError):
    pass


def kappa(multiplicities):
    n = [int(x) for x in multiplicities]
    if not n:
        raise ValueError("multiplicities must be nonempty")
    return sum(x * x for x in n)


def gammas(multiplicities):
    """``gamma_k = 2 sum_i n_i n_{i+k}`` for ``k = 1..r``.

    ``r = (m - 1) // 2`` for odd m and ``(m - 2) // 2`` for even m, which is
    ``(m - 1) // 2`` in both cases.
    """
    n = [int(x) for x in multiplicities]
    m = len(n)
    if m < 1:
        raise ValueError("multiplicities must be nonempty")
    r = (m - 1) // 2
    return [2 * sum(n[i] * n[i + k] for i in range(m - k)) for k in range(1, r + 1)]


def index_isolated(multiplicities):
    """Minimal observable count for purely Hamiltonian evolution."""
    return kappa(multiplicities)


def index_bruteforce(superop, tol=1e-9, group_tol=DEFAULT_GROUP_TOL):
    """``max_nu dim Ker(nu I - L)`` for an arbitrary generator matrix.

    Distinct eigenvalues are clustered in the complex plane with
    ``group_tol``; each kernel dimension is then a singular-value count
    against ``tol * max(||L||_2, 1)``.
    """
    s = np.asarray(superop, dtype=complex)
    n = s.shape[0]
    if not np.any(s):
        return n
    eig = np.linalg.eigvals(s)
    distinct = _cluster_complex(eig, group_tol)
    eye = np.eye(n)
    scale = max(np.linalg.norm(s, 2), 1.0)
    best = 0
    for nu in distinct:
        sv = np.linalg.svd(nu * eye - s, compute_uv=False)
        best = max(best, int(np.sum(sv <= tol * scale)))
    return max(best, 1)


def _cluster_complex(values, tol):
    centers = []
    for v in values:
        for i, c in enumerate(centers):
            if abs(v - c[0]) <= tol:
                c[1].append(v)
                break
        else:
            centers.append((v, [v]))
    return [np.mean(members) for _, members in centers]


@dataclass(frozen=True)
class Collision:
    eigenvalue: float
    classes: tuple[int, ...]

    def to_json(self):
        return {"eigenvalue": self.eigenvalue, "classes": list(self.classes)}


def resonance_report(eigenvalues, multiplicities=None, tol=DEFAULT_GROUP_TOL):
    """Detect squared gaps shared by pairs at different index distances.

    Returns ``(resonant, collisions)``; each collision is an eigenvalue
    ``-1/2 g^2`` of L together with the index distances ``|i - j|`` whose
    squared gaps merge into it.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(lam) <= 0):
        raise ValueError("eigenvalues must be strictly increasing")
    m = lam.size
    entries = sorted(
        ((lam[j] - lam[i]) ** 2, j - i) for i in range(m) for j in range(i, m)
    )
    collisions = []
    group = [entries[0]]
    for entry in entries[1:] + [None]:
        if entry is not None and entry[0] - group[-1][0] <= tol:
            group.append(entry)
            continue
        classes = tuple(sorted({k for _, k in group}))
        if len(classes) > 1:
            sq = float(np.mean([g for g, _ in group]))
            collisions.append(Collision(-0.5 * sq, classes))
        if entry is not None:
            group = [entry]
    return bool(collisions), collisions


@dataclass(frozen=True)
class CyclicityReport:
    kappa: int
    gammas: list[int]
    eta_closed: int
    eta_bruteforce: int | None = None
    resonant: bool = False
    collisions: list[Collision] = field(default_factory=list)

    @property
    def eta(self):
        """Authoritative index: the brute-force value when available."""
        return self.eta_closed if self.eta_bruteforce is None else self.eta_bruteforce

    @property
    def agrees(self):
        return self.eta_bruteforce is None or self.eta_bruteforce == self.eta_closed

    @property
    def warnings(self):
        out = []
        if self.resonant:
            out.append(
                "resonant spectrum: squared gaps of different index distances coincide, "
                "eigenspaces of L merge"
            )
        if not self.agrees:
            out.append(
                f"closed-form index {self.eta_closed} differs from kernel-dimension "
                f"index {self.eta_bruteforce}; using {self.eta_bruteforce}"
            )
        return out

    def to_json(self):
        return {
            "kappa": self.kappa,
            "gammas": list(self.gammas),
            "eta_closed": self.eta_closed,
            "eta_bruteforce": self.eta_bruteforce,
            "eta": self.eta,
            "resonant": self.resonant,
            "collisions": [c.to_json() for c in self.collisions],
            "warnings": self.warnings,
        }


def index_closed_form(h):
    h = as_hamiltonian(h)
    k = kappa(h.multiplicities)
    g = gammas(h.multiplicities)
    return CyclicityReport(kappa=k, gammas=g, eta_closed=max([k, *g]))


def cyclicity_report(h, tol=1e-9, group_tol=DEFAULT_GROUP_TOL):
    """Closed form, brute force and resonance flags for one Hamiltonian."""
    h = as_hamiltonian(h)
    closed = index_closed_form(h)
    superop = build_generator(h)
    brute = index_bruteforce(superop, tol=tol, group_tol=group_tol)
    resonant, collisions = resonance_report(h.eigenvalues, h.multiplicities, group_tol)
    return CyclicityReport(
        kappa=closed.kappa,
        gammas=closed.gammas,
        eta_closed=closed.eta_closed,
        eta_bruteforce=brute,
        resonant=resonant,
        collisions=collisions,
    )


@dataclass(frozen=True)
class MinimalPolynomial:
    """``mu(z) = prod (z - root)``, stored with coefficients ``d_k`` such that
    ``L^m = sum_k d_k L^k``."""

    roots: np.ndarray
    d_coeffs: np.ndarray

    @property
    def degree(self):
        return int(self.roots.size)

    @property
    def monic_coeffs(self):
        """Coefficients of ``mu`` in increasing powers, leading 1 last."""
        return np.append(-self.d_coeffs, 1.0)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.monic_coeffs)

    def apply(self, superop):
        s = np.asarray(superop)
        out = np.eye(s.shape[0], dtype=complex)
        for root in self.roots:
            out = out @ (s - root * np.eye(s.shape[0]))
        return out

    def to_json(self):
        return {
            "degree": self.degree,
            "roots": [float(r) for r in self.roots],
            "d_coeffs": [float(c) for c in self.d_coeffs],
        }


def _from_roots(roots):
    roots = np.sort(np.asarray(roots, dtype=float))[::-1]
    monic = np.polynomial.polynomial.polyfromroots(roots).real
    return MinimalPolynomial(roots=roots, d_coeffs=-monic[:-1] + 0.0)


def minimal_polynomial(source, tol=DEFAULT_GROUP_TOL):
    """Minimal polynomial from a :class:`SpectrumTable`, a Hamiltonian or L.

    A raw superoperator must be diagonalizable with real spectrum; this is
    checked through the rank of its eigenvector matrix.
    """
    if hasattr(source, "multiplicities") and hasattr(source, "eigenvalues"):
        if not hasattr(source, "total"):
            source = generator_spectrum(source, tol)
        return _from_roots(source.eigenvalues)
    s = np.asarray(source, dtype=complex)
    superop_dim(s)
    if not np.any(s):
        return _from_roots([0.0])
    if np.allclose(s, s.conj().T, atol=1e-12 * max(1.0, np.abs(s).max())):
        w = np.linalg.eigvalsh((s + s.conj().T) / 2)
    else:
        w, v = np.linalg.eig(s)
        if np.linalg.matrix_rank(v, tol=1e-8) < s.shape[0]:
            raise NotDiagonalizableError("superoperator is not diagonalizable")
        if np.max(np.abs(w.imag)) > tol:
            raise NotDiagonalizableError("superoperator has non-real eigenvalues")
        w = w.real
    roots, _ = group_values(w, tol)
    roots[np.abs(roots) <= tol] = 0.0
    return _from_roots(roots)
