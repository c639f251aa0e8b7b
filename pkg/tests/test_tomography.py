import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from conftest import PLUS, SIGMA_X, SIGMA_Y, SIGMA_Z
from oracles import FROZEN
from stroboscopic import scenarios
from stroboscopic.alpha_flow import (
    AlphaSystem,
    SingularGridError,
    TimeGrid,
    geometric_c_list,
    select_time_scale,
)
from stroboscopic.cyclicity import cyclicity_report, minimal_polynomial
from stroboscopic.generator import adjoint_generator, build_generator, evolve_exact, generator_spectrum
from stroboscopic.operator_core import (
    HamiltonianSpec,
    hermitian_basis,
    hermiticity_defect,
    random_observable,
    random_state,
)
from stroboscopic.tomography import (
    DesignError,
    RankDeficientError,
    design_observables,
    distinguishability_check,
    krylov_span,
    reconstruct,
    reconstruct_trajectory,
    simulate_data,
)

seeds = st.integers(0, 2**32 - 1)
QUBIT = HamiltonianSpec.from_levels([0.0, 1.0])
QUTRIT = HamiltonianSpec.from_levels([0.0, 1.0, 2.0])
I2 = np.eye(2, dtype=complex)


def system_of(h):
    return AlphaSystem.from_minimal_polynomial(minimal_polynomial(generator_spectrum(h)))


def pipeline(h, seed, observables=None):
    """Designed observables, selected grid and exact data for a random state."""
    l = build_generator(h)
    sys_ = system_of(h)
    obs = observables or design_observables(l, cyclicity_report(h).eta, seed=seed)
    c = geometric_c_list(sys_.m)
    sel = select_time_scale(sys_, c, horizon=40.0 * c[-1])
    rho = random_state(h.dim, seed)
    return l, sys_, obs, sel.grid, rho


class TestKrylovSpan:
    def test_paulis(self):
        l = build_generator(QUBIT)
        assert krylov_span(adjoint_generator(l), [SIGMA_X, SIGMA_Y, SIGMA_Z, I2], 2).rank == 4

    def test_two_mixed_paulis(self):
        l = build_generator(QUBIT)
        span = krylov_span(adjoint_generator(l), [SIGMA_X + SIGMA_Z, SIGMA_Y + I2], 2)
        assert span.rank == 4 and span.spans
        assert span.matrix.shape == (4, 4)

    def test_identity_only(self):
        l = build_generator(QUBIT)
        assert krylov_span(adjoint_generator(l), [I2], 2).rank == 1

    def test_power_basis_agrees_for_small_cases(self):
        l = build_generator(QUTRIT)
        obs = [random_observable(3, s) for s in range(3)]
        span = krylov_span(adjoint_generator(l), obs, 3)
        assert span.rank == np.linalg.matrix_rank(span.matrix, tol=1e-9 * np.linalg.norm(span.matrix, 2))


class TestDesign:
    def test_qubit(self):
        l = build_generator(QUBIT)
        obs = design_observables(l, 2, seed=0)
        assert len(obs) == 2
        assert all(hermiticity_defect(q) < 1e-15 for q in obs)
        assert krylov_span(adjoint_generator(l), obs, 2).rank == 4

    def test_zero_generator(self):
        l = build_generator(HamiltonianSpec.from_levels([1.0], [3]))
        obs = design_observables(l, 9, seed=0)
        assert all(np.array_equal(a, b) for a, b in zip(obs, hermitian_basis(3)))

    def test_qutrit(self):
        l = build_generator(QUTRIT)
        obs = design_observables(l, 4, seed=0)
        assert len(obs) == 4
        assert krylov_span(adjoint_generator(l), obs, 3).rank == 9

    def test_wrong_eta(self):
        with pytest.raises(DesignError):
            design_observables(build_generator(QUTRIT), 3, seed=0)

    def test_seeded(self):
        l = build_generator(QUTRIT)
        a = design_observables(l, 4, seed=5)
        b = design_observables(l, 4, seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))


class TestSimulate:
    def test_identity_row(self):
        h = HamiltonianSpec.from_levels([0.0, 1.0, 3.0])
        data = simulate_data(h, random_state(3, 2), [np.eye(3)], TimeGrid([0.0, 1.0, 2.0], 0.7))
        assert np.allclose(data.values, 1.0, atol=1e-14)

    def test_qubit_sigma_x(self):
        data = simulate_data(QUBIT, PLUS, [SIGMA_X], TimeGrid([1.0], 1.0))
        assert abs(data.values[0, 0] - FROZEN["sigma_x_expectation"]) <= 1e-12

    def test_zero_column_is_static(self):
        obs = [random_observable(3, s) for s in range(3)]
        rho = random_state(3, 4)
        data = simulate_data(QUTRIT, rho, obs, TimeGrid([0.0, 1.0, 2.0], 1.0))
        assert np.allclose(data.values[:, 0], [np.trace(q @ rho).real for q in obs], atol=1e-14)

    def test_noise_is_seeded(self):
        grid = TimeGrid([1.0, 2.0], 1.0)
        a = simulate_data(QUBIT, PLUS, [SIGMA_X], grid, 0.1, seed=3)
        b = simulate_data(QUBIT, PLUS, [SIGMA_X], grid, 0.1, seed=3)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, simulate_data(QUBIT, PLUS, [SIGMA_X], grid).values)


class TestReconstruct:
    def test_full_basis_single_instant(self):
        h = HamiltonianSpec.from_levels([0.5], [3])
        basis = hermitian_basis(3)
        rho = random_state(3, 8)
        grid = TimeGrid([0.0], 1.0)
        data = simulate_data(h, rho, basis, grid)
        res = reconstruct(basis, grid, data, build_generator(h), system_of(h))
        direct = sum(v * b for v, b in zip(data.values[:, 0], basis))
        assert np.linalg.norm(res.rho0_estimate - direct) <= 1e-14
        assert np.linalg.norm(res.rho0_estimate - rho) <= 1e-14

    def test_qubit_round_trip(self):
        l = build_generator(QUBIT)
        sys_ = system_of(QUBIT)
        obs = design_observables(l, 2, seed=1)
        grid = TimeGrid([1.0, 2.0], np.log(2))
        for seed in range(5):
            rho = random_state(2, seed)
            data = simulate_data(QUBIT, rho, obs, grid)
            for method in ("spectral", "monomial"):
                res = reconstruct(obs, grid, data, l, sys_, method=method)
                assert np.linalg.norm(res.rho0_estimate - rho) <= 1e-8
                assert res.residual <= 1e-12 and res.spanning_rank == 4

    def test_single_observable_rank_deficient(self):
        l = build_generator(QUBIT)
        obs = design_observables(l, 2, seed=1)[:1]
        grid = TimeGrid([1.0, 2.0], np.log(2))
        data = simulate_data(QUBIT, PLUS, obs, grid)
        with pytest.raises(RankDeficientError):
            reconstruct(obs, grid, data, l, system_of(QUBIT))

    def test_too_few_instants(self):
        l, sys_, obs, grid, rho = pipeline(QUTRIT, 0)
        times = grid.instants[:-1]
        data = simulate_data(QUTRIT, rho, obs, TimeGrid(times, 1.0))
        with pytest.raises(SingularGridError):
            reconstruct(obs, times, data.values, l, sys_)

    def test_repeated_instants(self):
        l, sys_, obs, grid, rho = pipeline(QUTRIT, 0)
        times = np.array([1.0, 1.0, 2.0])
        with pytest.raises(SingularGridError):
            reconstruct(obs, times, np.zeros((len(obs), 3)), l, sys_)

    def test_extra_instants_least_squares(self):
        l, sys_, obs, grid, rho = pipeline(QUTRIT, 2)
        grid = TimeGrid([0.0, 0.5, 1.0, 2.0, 4.0], 1.0)
        data = simulate_data(QUTRIT, rho, obs, grid)
        res = reconstruct(obs, grid, data, l, sys_)
        assert np.linalg.norm(res.rho0_estimate - rho) <= 1e-10

    def test_estimate_is_hermitian_unit_trace(self):
        l, sys_, obs, grid, rho = pipeline(QUTRIT, 3)
        data = simulate_data(QUTRIT, rho, obs, grid, noise_sigma=1e-2, seed=1)
        res = reconstruct(obs, grid, data, l, sys_)
        assert hermiticity_defect(res.rho0_estimate) <= 1e-15
        assert abs(np.trace(res.rho0_estimate) - 1) <= 1e-14
        assert res.residual > 0

    @settings(max_examples=15)
    @given(seeds)
    def test_round_trip(self, seed):
        h = scenarios.reconstruction_scenario(np.random.default_rng(seed), max_dim=5)
        l, sys_, obs, grid, rho = pipeline(h, seed)
        res = reconstruct(obs, grid, simulate_data(h, rho, obs, grid), l, sys_)
        assert np.linalg.norm(res.rho0_estimate - rho) <= 1e-8

    def test_noise_monotone(self):
        h = scenarios.reconstruction_scenario(np.random.default_rng(11), max_dim=4)
        l, sys_, obs, grid, rho = pipeline(h, 11)
        sigmas = [0.0, 1e-4, 1e-3, 1e-2]
        errs = []
        for s in sigmas:
            data = simulate_data(h, rho, obs, grid, noise_sigma=s, seed=0)
            errs.append(np.linalg.norm(reconstruct(obs, grid, data, l, sys_).rho0_estimate - rho))
        assert spearmanr(sigmas, errs).statistic > 0


class TestMinimality:
    @given(seeds)
    def test_designed_subsets(self, seed):
        rng = np.random.default_rng(seed)
        h = scenarios.reconstruction_scenario(rng, max_dim=4)
        l = build_generator(h)
        eta = cyclicity_report(h).eta
        obs = design_observables(l, eta, seed=seed)
        keep = rng.choice(eta, size=eta - 1, replace=False)
        span = krylov_span(adjoint_generator(l), [obs[i] for i in keep], system_of(h).m)
        assert not span.spans

    @given(seeds)
    def test_fresh_random_sets(self, seed):
        rng = np.random.default_rng(seed)
        h = scenarios.reconstruction_scenario(rng, max_dim=4)
        l = build_generator(h)
        eta = cyclicity_report(h).eta
        obs = [random_observable(h.dim, seed + i) for i in range(eta - 1)]
        assert not krylov_span(adjoint_generator(l), obs, system_of(h).m).spans


class TestTrajectory:
    def test_zero(self):
        l, sys_, obs, grid, rho = pipeline(QUTRIT, 1)
        res = reconstruct(obs, grid, simulate_data(QUTRIT, rho, obs, grid), l, sys_)
        (first,) = reconstruct_trajectory(res, QUTRIT, [0.0])
        assert np.allclose(first, res.rho0_estimate, atol=1e-15)

    def test_matches_forward_model(self):
        l, sys_, obs, grid, rho = pipeline(QUTRIT, 4)
        res = reconstruct(obs, grid, simulate_data(QUTRIT, rho, obs, grid), l, sys_)
        ts = np.random.default_rng(0).uniform(0, 5, 10)
        for t, est in zip(ts, reconstruct_trajectory(res, QUTRIT, ts)):
            assert np.linalg.norm(est - evolve_exact(QUTRIT, rho, t)) <= 1e-8
            assert abs(np.trace(est) - 1) <= 1e-12

    def test_negative_time(self):
        with pytest.raises(ValueError):
            reconstruct_trajectory(PLUS, QUBIT, [-1.0])


class TestDistinguishability:
    def test_equal_states(self):
        ok, witness = distinguishability_check(PLUS, PLUS, [SIGMA_X], TimeGrid([1.0, 2.0], 1.0), QUBIT)
        assert not ok and witness is None

    def test_phase_blind_diagonal_observables(self):
        r1 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        r2 = np.array([[0.5, 0.5j], [-0.5j, 0.5]], dtype=complex)
        grid = TimeGrid([0.0, 1.0, 2.0, 5.0], 1.0)
        ok, _ = distinguishability_check(r1, r2, [SIGMA_Z, I2], grid, QUBIT)
        assert not ok
        ok, witness = distinguishability_check(r1, r2, [SIGMA_Z, SIGMA_X], grid, QUBIT)
        assert ok and witness == (1, 0)

    @settings(max_examples=15)
    @given(seeds)
    def test_spanning_set_is_injective(self, seed):
        h = scenarios.reconstruction_scenario(np.random.default_rng(seed), max_dim=4)
        l, sys_, obs, grid, rho = pipeline(h, seed)
        rho2 = random_state(h.dim, seed + 1)
        if np.linalg.norm(rho - rho2) > 1e-6:
            assert distinguishability_check(rho, rho2, obs, grid, h)[0]
