"""Observable design, synthetic measurement data and state reconstruction.

Measured data are ``E[i, j] = Tr(Q_i rho(t_j))``. Writing
``exp(t L) = sum_k alpha_k(t) L^k`` gives

    E[i, j] = sum_k alpha_k(t_j) ((L*)^k Q_i, rho0),

so rho0 is recovered in two linear stages: first the moments
``b[i, k] = ((L*)^k Q_i, rho0)`` from each data row, then rho0 from the
stacked moments. Both stages are solved in the eigenbasis of L* (see
:func:`reconstruct`), which is the same linear system premultiplied by the
inverse transposed Vandermonde matrix of the roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alpha_flow import AlphaSystem, TimeGrid, SingularGridError, alpha_matrix
from .cyclicity import minimal_polynomial
from .generator import adjoint_generator, as_hamiltonian, evolve_exact
from .operator_core import (
    devectorize,
    group_values,
    hermitian_basis,
    hermitize,
    project_unit_trace,
    superop_dim,
    validate_density,
    vectorize,
)

RANK_TOL = 1e-9
MAX_GRID_CONDITION = 1e13


class RankDeficientError(ValueError):
    """The Krylov family of the observables does not span the operator space."""


class DesignError(RuntimeError):
    """Greedy observable design did not terminate with eta observables."""


@dataclass(frozen=True)
class EigenFrame:
    """Orthonormal eigenvectors of a Hermitian superoperator, grouped by value."""

    values: np.ndarray
    blocks: list

    @classmethod
    def of(cls, superop, tol=1e-8):
        s = np.asarray(superop, dtype=complex)
        if np.max(np.abs(s - s.conj().T), initial=0.0) > 1e-10 * max(1.0, np.abs(s).max()):
            raise ValueError("eigenspace decomposition needs a self-adjoint superoperator")
        w, x = np.linalg.eigh((s + s.conj().T) / 2)
        centers, counts = group_values(w, tol)
        centers[np.abs(centers) <= tol] = 0.0
        splits = np.cumsum(counts)[:-1]
        return cls(centers, np.split(x, splits, axis=1))

    def coordinates(self, op):
        """Coordinates of ``op`` in each eigenspace."""
        v = vectorize(np.asarray(op, dtype=complex))
        return [b.conj().T @ v for b in self.blocks]

    def component(self, op, index):
        b = self.blocks[index]
        return devectorize(b @ (b.conj().T @ vectorize(np.asarray(op, dtype=complex))))

    def matched_to(self, roots, tol=1e-6):
        """Block order that follows ``roots``; every root must hit one block."""
        order = []
        for r in roots:
            i = int(np.argmin(np.abs(self.values - r)))
            if abs(self.values[i] - r) > tol * max(1.0, abs(r)) or i in order:
                raise ValueError(f"root {r} does not match an eigenvalue of the superoperator")
            order.append(i)
        if len(order) != self.values.size:
            raise ValueError("roots do not cover the spectrum of the superoperator")
        return order

    def propagate(self, op, t):
        """``exp(t S) op`` using the eigendecomposition."""
        v = vectorize(np.asarray(op, dtype=complex))
        out = np.zeros_like(v)
        for nu, b in zip(self.values, self.blocks):
            out += np.exp(t * nu) * (b @ (b.conj().T @ v))
        return devectorize(out)


@dataclass(frozen=True)
class KrylovSpan:
    rank: int
    matrix: np.ndarray
    block_ranks: list

    @property
    def dim(self):
        return self.matrix.shape[1]

    @property
    def spans(self):
        return self.rank == self.dim


def _block_rank(coords, scale, tol):
    if coords.size == 0:
        return 0
    s = np.linalg.svd(coords, compute_uv=False)
    return int(np.sum(s > tol * scale))


def krylov_span(adj_superop, observables, depth=None, tol=RANK_TOL):
    """Rank of the family ``(L*)^k Q_i``, ``k < depth``.

    ``matrix`` stacks the vectorized family row by row (observable-major).
    For a self-adjoint L* the rank is evaluated blockwise on its eigenspaces:
    with ``depth`` at least the number of distinct eigenvalues the family
    spans exactly the sum of the eigenspace components of the Q_i, and the
    blockwise count avoids the ill-conditioning of the power basis.
    """
    s = np.asarray(adj_superop, dtype=complex)
    d2 = s.shape[0]
    obs = [np.asarray(q, dtype=complex) for q in observables]
    if depth is None:
        depth = minimal_polynomial(s).degree
    rows = []
    for q in obs:
        v = vectorize(q)
        for _ in range(depth):
            rows.append(v)
            v = s @ v
    matrix = np.array(rows).reshape(len(rows), d2)
    scale = max((np.linalg.norm(q) for q in obs), default=1.0)
    try:
        frame = EigenFrame.of(s)
    except ValueError:
        frame = None
    if frame is not None and depth >= frame.values.size:
        block_ranks = []
        for i in range(frame.values.size):
            coords = np.array([frame.coordinates(q)[i] for q in obs]) if obs else np.empty((0, 0))
            block_ranks.append(_block_rank(coords, scale, tol))
        return KrylovSpan(int(sum(block_ranks)), matrix, block_ranks)
    normed = matrix / np.maximum(np.linalg.norm(matrix, axis=1, keepdims=True), 1e-300)
    rank = _block_rank(normed, 1.0, tol) if normed.size else 0
    return KrylovSpan(rank, matrix, [rank])


def design_observables(superop, eta, seed=None, max_retries=8, tol=RANK_TOL):
    """Greedy construction of ``eta`` observables whose Krylov family spans.

    Each new candidate is a random Hermitian matrix with the current Krylov
    span projected out. For L = 0 the Hermitian basis is returned.
    """
    s = np.asarray(superop, dtype=complex)
    d = superop_dim(s)
    if not np.any(np.abs(s) > 1e-14):
        if eta != d * d:
            raise DesignError(f"L = 0 needs {d * d} observables, asked for {eta}")
        return hermitian_basis(d)
    adj = adjoint_generator(s)
    frame = EigenFrame.of(adj)
    dims = [b.shape[1] for b in frame.blocks]
    if max(dims) != eta:
        raise DesignError(f"largest eigenspace has dimension {max(dims)}, asked for eta = {eta}")
    seeds = np.random.SeedSequence(seed).spawn(max_retries)
    for attempt in range(max_retries):
        rng = np.random.default_rng(seeds[attempt])
        chosen = _greedy(frame, dims, eta, d, rng, tol)
        if chosen is not None:
            return chosen
    raise DesignError(f"no spanning set of {eta} observables after {max_retries} draws")


def _greedy(frame, dims, eta, d, rng, tol):
    # orthonormal bases of the covered part of each eigenspace
    covered = [np.zeros((n, 0), dtype=complex) for n in dims]
    chosen = []
    while sum(c.shape[1] for c in covered) < d * d:
        if len(chosen) == eta:
            return None
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        cand = (g + g.conj().T) / 2
        coords = frame.coordinates(cand)
        vec = np.zeros(d * d, dtype=complex)
        for i, (c, basis) in enumerate(zip(coords, covered)):
            resid = c - basis @ (basis.conj().T @ c)
            vec += frame.blocks[i] @ resid
        q = hermitize(devectorize(vec))
        q = q / np.linalg.norm(q)
        chosen.append(q)
        for i, c in enumerate(frame.coordinates(q)):
            stacked = np.column_stack([covered[i], c])
            u, sv, _ = np.linalg.svd(stacked, full_matrices=False)
            covered[i] = u[:, sv > tol * max(1.0, sv[0] if sv.size else 1.0)]
    return chosen


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    grid: TimeGrid
    noise_sigma: float = 0.0

    @property
    def times(self):
        return self.grid.instants


def simulate_data(h, rho0, observables, grid, noise_sigma=0.0, seed=None):
    """Expectation values ``Tr(Q_i rho(t_j))`` with optional Gaussian noise."""
    h = as_hamiltonian(h)
    rho0 = np.asarray(rho0, dtype=complex)
    values = np.empty((len(observables), grid.instants.size))
    for j, t in enumerate(grid.instants):
        rho_t = evolve_exact(h, rho0, float(t))
        for i, q in enumerate(observables):
            values[i, j] = np.trace(np.asarray(q) @ rho_t).real
    if noise_sigma:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise_sigma, size=values.shape)
    return DataMatrix(values, grid, float(noise_sigma))


@dataclass(frozen=True)
class ReconstructionResult:
    rho0_estimate: np.ndarray
    residual: float
    condition_number: float
    spanning_rank: int
    moments: np.ndarray
    min_eigenvalue: float

    def to_json(self):
        from .io import complex_matrix_to_json

        return {
            "rho0_estimate": complex_matrix_to_json(self.rho0_estimate),
            "residual": self.residual,
            "condition_number": self.condition_number,
            "spanning_rank": self.spanning_rank,
            "min_eigenvalue": self.min_eigenvalue,
        }


def data_map(frame, observables, times):
    """Rows of the linear map ``rho0 -> Tr(Q_i rho(t_j))`` acting on vec(rho0)."""
    rows = []
    for q in observables:
        for t in times:
            rows.append(vectorize(frame.propagate(q, float(t))).conj())
    return np.array(rows)


def reconstruct(
    observables,
    grid,
    data,
    superop,
    alpha_sys: AlphaSystem,
    method="spectral",
    alpha_method="interp",
    tol=RANK_TOL,
):
    """Recover rho0 from ``data`` (a :class:`DataMatrix` or an n x r array).

    Stage 1 solves ``[alpha_k(t_j)] b_i = E_i`` for the moments of each
    observable; stage 2 solves the stacked least-squares problem
    ``((L*)^k Q_i, rho0) = b[i, k]``.

    ``method="spectral"`` factors ``[alpha_k(t_j)] = X V^-T`` with
    ``X[j, l] = exp(t_j nu_l)`` and solves both stages in eigenspace
    coordinates; ``method="monomial"`` uses the power basis literally and is
    only well conditioned for small m. More than m instants are handled by
    least squares in stage 1.
    """
    values = data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)
    times = grid.instants if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    obs = [np.asarray(q, dtype=complex) for q in observables]
    s = np.asarray(superop, dtype=complex)
    d = superop_dim(s)
    m = alpha_sys.m
    if values.shape != (len(obs), times.size):
        raise ValueError(f"data shape {values.shape} does not match {len(obs)} observables x {times.size} instants")
    if times.size < m:
        raise SingularGridError(f"{times.size} instants cannot determine {m} alpha coefficients")
    if np.unique(times).size != times.size:
        raise SingularGridError("time instants must be distinct")

    adj = adjoint_generator(s)
    frame = EigenFrame.of(adj)
    order = frame.matched_to(alpha_sys.roots)
    roots = frame.values[order]
    blocks = [frame.blocks[i] for i in order]
    span = krylov_span(adj, obs, depth=m, tol=tol)
    if not span.spans:
        raise RankDeficientError(f"Krylov family has rank {span.rank} < {d * d}")

    vander_t = np.vander(roots, m, increasing=True).T
    if method == "spectral":
        modes = np.exp(np.outer(times, roots))
        cond = np.linalg.cond(modes)
        if not np.isfinite(cond) or cond > MAX_GRID_CONDITION:
            raise SingularGridError(f"time grid is singular (mode matrix condition {cond:.3g})")
        comps = np.linalg.lstsq(modes, values.T, rcond=None)[0].T
        moments = comps @ vander_t.T
        rows, rhs = [], []
        for i, q in enumerate(obs):
            v = vectorize(q)
            for l, b in enumerate(blocks):
                rows.append((b @ (b.conj().T @ v)).conj())
                rhs.append(comps[i, l])
    elif method == "monomial":
        amat = alpha_matrix(alpha_sys, times, alpha_method)
        cond = np.linalg.cond(amat)
        if not np.isfinite(cond) or cond > 1 / np.finfo(float).eps:
            raise SingularGridError(f"alpha matrix is singular (condition {cond:.3g})")
        moments = np.linalg.lstsq(amat, values.T, rcond=None)[0].T
        rows = [r.conj() for r in span.matrix]
        rhs = moments.ravel()
    else:
        raise ValueError(f"unknown method {method!r}")

    x = np.linalg.lstsq(np.array(rows), np.array(rhs, dtype=complex), rcond=None)[0]
    rho = project_unit_trace(devectorize(x))
    full_map = data_map(frame, obs, times)
    predicted = (full_map @ vectorize(rho)).real.reshape(len(obs), times.size)
    residual = float(np.linalg.norm(predicted - values))
    condition = float(np.linalg.cond(full_map))
    return ReconstructionResult(
        rho0_estimate=rho,
        residual=residual,
        condition_number=condition,
        spanning_rank=span.rank,
        moments=moments,
        min_eigenvalue=validate_density(rho).min_eigenvalue,
    )


def reconstruct_trajectory(result, h, t_list):
    if any(t < 0 for t in t_list):
        raise ValueError("times must be nonnegative")
    rho0 = result.rho0_estimate if isinstance(result, ReconstructionResult) else result
    return [evolve_exact(h, rho0, float(t)) for t in t_list]


def distinguishability_check(rho1, rho2, observables, grid, h, tol=1e-9):
    """First ``(i, j)`` where the two trajectories give different expectations."""
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if rho1.shape != rho2.shape:
        raise ValueError("states have different dimensions")
    times = grid.instants if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    for i, q in enumerate(observables):
        for j, t in enumerate(times):
            diff = np.trace(np.asarray(q) @ (evolve_exact(h, rho1, float(t)) - evolve_exact(h, rho2, float(t))))
            if abs(diff) > tol:
                return True, (i, j)
    return False, None
