import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from oracles import FROZEN, alpha_exact
from stroboscopic import scenarios
from stroboscopic.alpha_flow import (
    AlphaSystem,
    SingularGridError,
    TimeGrid,
    alpha_interp,
    alpha_matrix,
    alpha_ode,
    flow_from_alpha,
    geometric_c_list,
    grid_determinant,
    select_time_scale,
    taylor_lowest_order,
    uniform_c_list,
)
from stroboscopic.cyclicity import minimal_polynomial
from stroboscopic.generator import build_generator, generator_spectrum

seeds = st.integers(0, 2**32 - 1)
TWO = AlphaSystem.from_roots([0.0, -1.0])
THREE = AlphaSystem.from_roots([0.0, -0.5, -2.0])


def system_of(h):
    return AlphaSystem.from_minimal_polynomial(minimal_polynomial(generator_spectrum(h)))


class TestAlphaSystem:
    def test_from_roots_convention(self):
        # z^2 + z = z^2 - (d0 + d1 z) with d = (0, -1)
        assert np.allclose(TWO.d_coeffs, [0.0, -1.0])
        assert np.allclose(THREE.d_coeffs, [0.0, -1.0, -2.5])

    def test_companion_eigenvalues(self):
        w = np.sort(np.linalg.eigvals(THREE.companion()).real)
        assert np.allclose(w, [-2.0, -0.5, 0.0])


class TestAlphaOde:
    def test_initial_value(self):
        assert np.array_equal(alpha_ode(THREE, [0.0])[0], [1.0, 0.0, 0.0])

    def test_two_root_closed_form(self):
        ts = np.array([0.0, 0.3, 1.0, 4.0])
        got = alpha_ode(TWO, ts)
        assert np.allclose(got[:, 0], 1.0, atol=1e-12)
        assert np.allclose(got[:, 1], 1 - np.exp(-ts), atol=1e-11)

    def test_unsorted_times(self):
        ts = [3.0, 0.0, 1.0]
        got = alpha_ode(THREE, ts)
        for row, t in zip(got, ts):
            assert np.allclose(row, alpha_ode(THREE, [t])[0], atol=1e-11)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            alpha_ode(THREE, [-0.1])

    @given(st.floats(0.0, 5.0))
    def test_interpolates_exponential(self, t):
        a = alpha_ode(THREE, [t])[0]
        for nu in THREE.roots:
            assert abs(np.polyval(a[::-1], nu) - np.exp(t * nu)) <= 1e-10


class TestAlphaInterp:
    @pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
    def test_against_reference_and_ode(self, t):
        a = alpha_interp(THREE, t)
        assert np.max(np.abs(a - FROZEN["alpha_012"][t])) <= 1e-12
        assert np.max(np.abs(a - alpha_ode(THREE, [t])[0])) <= 1e-10

    def test_single_root(self):
        assert alpha_interp(AlphaSystem.from_roots([0.0]), 2.0).tolist() == [1.0]

    def test_repeated_roots(self):
        with pytest.raises(ValueError):
            alpha_interp(AlphaSystem(np.array([0.0, 0.0]), np.array([0.0, 0.0])), 1.0)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            alpha_interp(THREE, -1.0)

    def test_many_roots_against_high_precision(self):
        roots = [0.0, -0.02, -0.3, -0.9, -1.7, -2.6, -3.9, -5.1, -6.6, -8.0, -9.5]
        sys_ = AlphaSystem.from_roots(roots)
        for t in (0.5, 2.0, 5.0):
            ref = np.array(alpha_exact(roots, t))
            got = alpha_interp(sys_, t)
            assert np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1.0)) <= 1e-10

    @given(seeds, st.floats(0.0, 5.0))
    def test_representation_identity(self, seed, t):
        h = scenarios.reconstruction_scenario(np.random.default_rng(seed), max_dim=5)
        l = build_generator(h)
        sys_ = system_of(h)
        target = expm(t * l)
        for method in ("interp", "ode"):
            a = alpha_matrix(sys_, [t], method)[0]
            assert np.linalg.norm(target - flow_from_alpha(a, l)) <= 1e-9


class TestGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid([1.0, 1.0], 1.0)
        with pytest.raises(ValueError):
            TimeGrid([1.0, 2.0], 0.0)
        with pytest.raises(ValueError):
            TimeGrid([-1.0, 2.0], 1.0)

    def test_instants_and_horizon(self):
        g = TimeGrid([1.0, 2.0, 4.0], 0.5)
        assert g.instants.tolist() == [0.5, 1.0, 2.0]
        assert g.within(2.0) and not g.within(1.9)

    def test_default_lists(self):
        assert uniform_c_list(3).tolist() == [1.0, 2.0, 3.0]
        assert geometric_c_list(4).tolist() == [0.0, 1.0, 2.0, 4.0]
        assert geometric_c_list(1).tolist() == [1.0]


class TestDeterminant:
    def test_two_root_closed_form(self):
        assert abs(grid_determinant(TWO, TimeGrid([1.0, 2.0], np.log(2))) - 0.25) <= 1e-12
        for t in (0.1, 1.0, 3.0):
            want = np.exp(-t) - np.exp(-2 * t)
            assert abs(grid_determinant(TWO, TimeGrid([1.0, 2.0], t)) - want) <= 1e-12

    def test_vanishes_at_small_scale(self):
        vals = [abs(grid_determinant(THREE, TimeGrid([1.0, 2.0, 3.0], t))) for t in (1e-1, 1e-2, 1e-3)]
        assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-8

    def test_single_root(self):
        sys_ = AlphaSystem.from_roots([0.0])
        assert grid_determinant(sys_, TimeGrid([1.0], 3.0)) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            grid_determinant(THREE, TimeGrid([1.0, 2.0], 1.0))


class TestTaylor:
    def test_two_roots(self):
        term = taylor_lowest_order(TWO, [1.0, 2.0])
        assert (term.order, float(term.series_coefficient)) == FROZEN["taylor_m2_c12"]
        assert abs(term.coefficient - 1.0) <= 1e-12

    def test_single_root(self):
        term = taylor_lowest_order(AlphaSystem.from_roots([0.0]), [1.0])
        assert term.order == 0 and term.coefficient == 1.0

    @pytest.mark.parametrize(
        "roots,c,key",
        [
            ([0.0, -0.5, -2.0], [1.0, 2.0, 3.0], "taylor_m3_c123"),
            ([0.0, -0.5, -2.0], [1.0, 2.0, 4.0], "taylor_m3_c124"),
            ([0.0, -0.5, -2.0, -4.5], [1.0, 2.0, 3.0, 4.0], "taylor_m4_c1234"),
        ],
    )
    def test_against_symbolic_series(self, roots, c, key):
        term = taylor_lowest_order(AlphaSystem.from_roots(roots), c)
        order, coef = FROZEN[key]
        assert term.order == order
        assert term.series_coefficient == Fraction(coef)

    def test_derivative_constant(self):
        # derivative of order K = m(m-1)/2 is K! / prod_{k<m} k! times the Vandermonde product
        for m, const in ((2, 1), (3, 3), (4, 60)):
            c = np.array([0.5, 1.25, 2.0, 3.5][:m])
            vprod = np.prod([c[i] - c[j] for i in range(m) for j in range(i)])
            sys_ = AlphaSystem.from_roots(-np.linspace(0, 2, m))
            assert abs(taylor_lowest_order(sys_, c).coefficient / vprod - const) <= 1e-10

    def test_degenerate_c_list(self):
        with pytest.raises(ValueError):
            taylor_lowest_order(THREE, [1.0, 1.0, 2.0])

    @given(seeds)
    def test_order_is_triangular_number(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 5))
        roots = np.concatenate([[0.0], -np.sort(rng.uniform(0.1, 3.0, m - 1))])
        c = np.sort(rng.choice(np.arange(0, 40), size=m, replace=False)) / 8.0
        term = taylor_lowest_order(AlphaSystem.from_roots(roots), c)
        assert term.order == m * (m - 1) // 2 and term.coefficient != 0


class TestSelectTimeScale:
    def test_two_roots(self):
        sel = select_time_scale(TWO, [1.0, 2.0], horizon=10.0)
        assert abs(sel.t_star - np.log(2)) <= 1e-6
        assert abs(sel.det_value - 0.25) <= 1e-9
        assert sel.zero_locations == [0.0]

    def test_single_root(self):
        sel = select_time_scale(AlphaSystem.from_roots([0.0]), [1.0], horizon=4.0)
        assert sel.t_star == 2.0 and sel.det_value == 1.0 and sel.zero_locations == []

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            select_time_scale(TWO, [1.0], 1.0)
        with pytest.raises(ValueError):
            select_time_scale(TWO, [1.0, 2.0], 1.0, samples=1)

    def test_floor(self):
        # roots this close make the determinant numerically zero at small scales
        sys_ = AlphaSystem.from_roots([0.0, -1e-7, -2e-7, -3e-7])
        with pytest.raises(SingularGridError):
            select_time_scale(sys_, [1.0, 2.0, 3.0, 4.0], horizon=1e-3)

    def test_floor_on_uniform_grid(self):
        # seven roots on c_j = j: the determinant never leaves roundoff level
        roots = [0.0, -0.0263, -0.0792, -1.294, -1.690, -2.014, -2.501]
        with pytest.raises(SingularGridError):
            select_time_scale(AlphaSystem.from_roots(roots), uniform_c_list(7), horizon=10.0)
        sel = select_time_scale(AlphaSystem.from_roots(roots), geometric_c_list(7), horizon=40.0 * 32)
        assert sel.det_value > 1e-7 and sel.zero_locations == [0.0]

    @given(seeds, st.sampled_from(["uniform", "geometric"]))
    def test_zeros_isolated_and_sign_constant(self, seed, spacing):
        h = scenarios.reconstruction_scenario(np.random.default_rng(seed), max_dim=4)
        sys_ = system_of(h)
        if spacing == "uniform":
            c, horizon = uniform_c_list(sys_.m), 4.0 * sys_.m
        else:
            c = geometric_c_list(sys_.m)
            horizon = 40.0 * c[-1]
        try:
            sel = select_time_scale(sys_, c, horizon=horizon, samples=200)
        except SingularGridError:
            assert spacing == "uniform" and sys_.m >= 6
            return
        zeros = sel.zero_locations
        assert len(zeros) < 200 and sel.t_star not in zeros
        edges = list(zeros) + [horizon / c[-1]]
        for a, b in zip(edges, edges[1:]):
            signs = set()
            for t in np.linspace(a, b, 12)[1:-1]:
                rows = alpha_matrix(sys_, c * t)
                det = np.linalg.det(rows)
                if abs(det) > 64 * np.finfo(float).eps * np.prod(np.linalg.norm(rows, axis=1)):
                    signs.add(np.sign(det))
            assert len(signs) <= 1
        rows = alpha_matrix(sys_, c * sel.t_star)
        assert np.linalg.matrix_rank(rows) == sys_.m
