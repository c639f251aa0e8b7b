"""Seeded random problem generators shared by the verify suites and tests."""

from __future__ import annotations

import numpy as np

from .cyclicity import resonance_report
from .generator import generator_spectrum
from .operator_core import HamiltonianSpec, random_unitary


def random_multiplicities(rng, m, max_mult, max_dim=None):
    while True:
        n = rng.integers(1, max_mult + 1, size=m)
        if max_dim is None or n.sum() <= max_dim:
            return n


def random_levels(rng, m, spread=3.0, min_gap=0.1):
    """m strictly increasing levels in ``[0, spread]`` at least ``min_gap`` apart."""
    while True:
        lam = np.sort(rng.uniform(0.0, spread, size=m))
        if m == 1 or np.min(np.diff(lam)) >= min_gap:
            return lam


def random_hamiltonian(rng, m, multiplicities, spread=3.0, min_gap=0.1):
    lam = random_levels(rng, m, spread, min_gap)
    d = int(np.sum(multiplicities))
    u = random_unitary(d, rng.integers(2**63))
    return HamiltonianSpec(lam, multiplicities, u)


def random_nonresonant_hamiltonian(rng, m, multiplicities, tol=1e-8, spread=3.0, min_gap=0.1):
    while True:
        h = random_hamiltonian(rng, m, multiplicities, spread, min_gap)
        if not resonance_report(h.eigenvalues, h.multiplicities, tol)[0]:
            return h


def random_composition(rng, d, parts):
    """Random ordered multiplicities: ``parts`` positive integers summing to d."""
    cuts = np.sort(rng.choice(np.arange(1, d), size=parts - 1, replace=False))
    return np.diff(np.concatenate([[0], cuts, [d]])).astype(int)


def well_separated(h, rel_sep):
    """Distinct eigenvalues of L are at least ``rel_sep * spread`` apart."""
    nu = generator_spectrum(h).eigenvalues
    if nu.size < 2:
        return True
    return bool(np.min(np.diff(nu)) >= rel_sep * (nu.max() - nu.min()))


def reconstruction_scenario(rng, max_dim=5, rel_sep=0.01):
    """Non-resonant H with d <= max_dim and a well-separated generator spectrum."""
    while True:
        d = int(rng.integers(2, max_dim + 1))
        n = random_composition(rng, d, int(rng.integers(2, d + 1)))
        h = random_nonresonant_hamiltonian(rng, n.size, n)
        if well_separated(h, rel_sep):
            return h
