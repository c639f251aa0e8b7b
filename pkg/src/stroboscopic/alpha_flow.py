"""Scalar coefficients of ``exp(tL) = sum_k alpha_k(t) L^k``.

Two independent evaluators are provided:

* :func:`alpha_ode` integrates the companion system
  ``alpha_0' = d_0 alpha_{m-1}``, ``alpha_k' = alpha_{k-1} + d_k alpha_{m-1}``
  from ``alpha(0) = e_0`` and only uses the coefficients ``d_k``;
* :func:`alpha_interp` solves the Vandermonde system on the roots of the
  minimal polynomial, i.e. interpolates ``exp(t z)`` on the spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.optimize import brentq, minimize_scalar

from .cyclicity import MinimalPolynomial

DEFAULT_ODE_TOL = 1e-12
DET_FLOOR = 1e-12


class SingularGridError(ValueError):
    """The time grid makes the alpha matrix singular or underdetermined."""


@dataclass(frozen=True)
class AlphaSystem:
    roots: np.ndarray
    d_coeffs: np.ndarray

    @classmethod
    def from_minimal_polynomial(cls, mp: MinimalPolynomial):
        return cls(np.asarray(mp.roots, dtype=float), np.asarray(mp.d_coeffs, dtype=float))

    @classmethod
    def from_roots(cls, roots):
        roots = np.sort(np.asarray(roots, dtype=float))[::-1]
        monic = np.polynomial.polynomial.polyfromroots(roots).real
        return cls(roots, -monic[:-1])

    @property
    def m(self):
        return int(self.roots.size)

    def companion(self):
        """Matrix C with ``alpha' = C alpha``."""
        m = self.m
        c = np.zeros((m, m))
        c[np.arange(1, m), np.arange(m - 1)] = 1.0
        c[:, m - 1] += self.d_coeffs
        return c

    def vandermonde_condition(self):
        v = np.vander(self.roots, self.m, increasing=True)
        return float(np.linalg.cond(v))


@dataclass(frozen=True)
class TimeGrid:
    c_list: np.ndarray
    t_scale: float

    def __post_init__(self):
        c = np.asarray(self.c_list, dtype=float).ravel()
        if c.size == 0 or np.any(c < 0) or np.any(np.diff(c) <= 0):
            raise ValueError("c_list must be nonempty, nonnegative and strictly increasing")
        if not self.t_scale > 0:
            raise ValueError("t_scale must be positive")
        object.__setattr__(self, "c_list", c)
        object.__setattr__(self, "t_scale", float(self.t_scale))

    @property
    def instants(self):
        return self.c_list * self.t_scale

    def within(self, horizon):
        return bool(self.instants[-1] <= horizon * (1 + 1e-12))


def uniform_c_list(m):
    return np.arange(1, m + 1, dtype=float)


def geometric_c_list(m):
    """``(0, 1, 2, 4, ..., 2^(m-2))``: instants spread on a log scale.

    The exponential modes decay at rates spread over orders of magnitude,
    so log-spaced instants keep the per-observable inversion far better
    conditioned than uniform ones once m grows past ~7.
    """
    if m == 1:
        return np.array([1.0])
    return np.concatenate([[0.0], 2.0 ** np.arange(m - 1)])


def _check_times(t_points):
    t = np.asarray(t_points, dtype=float).ravel()
    if np.any(t < 0):
        raise ValueError("time points must be nonnegative")
    return t


def alpha_ode(sys: AlphaSystem, t_points, tol=DEFAULT_ODE_TOL):
    """Matrix ``[alpha_k(t_j)]`` (rows t_j) by adaptive integration (DOP853)."""
    t = _check_times(t_points)
    m = sys.m
    out = np.zeros((t.size, m))
    y0 = np.zeros(m)
    y0[0] = 1.0
    if m == 1:
        # alpha_0' = d_0 alpha_0
        out[:, 0] = np.exp(sys.d_coeffs[0] * t)
        return out
    order = np.argsort(t)
    ts = t[order]
    at_zero = ts == 0
    out_sorted = np.zeros((t.size, m))
    out_sorted[at_zero] = y0
    pos = ts[~at_zero]
    if pos.size:
        c = sys.companion()
        sol = solve_ivp(
            lambda _, y: c @ y,
            (0.0, pos[-1]),
            y0,
            method="DOP853",
            t_eval=pos,
            rtol=tol,
            atol=tol * 1e-2,
        )
        if not sol.success:
            raise RuntimeError(f"alpha ODE integration failed: {sol.message}")
        out_sorted[~at_zero] = sol.y.T
    out[order] = out_sorted
    return out


def exp_divided_differences(nodes, t):
    """Divided differences ``f[x_0], f[x_0,x_1], ...`` of ``f(z) = exp(t z)``.

    Uses the fact that f applied to the bidiagonal matrix with the nodes on
    the diagonal and ones above it carries the divided differences in its
    first row, which avoids the cancellation of the difference quotients.
    """
    x = np.asarray(nodes, dtype=float)
    m = x.size
    j = np.diag(x) + np.diag(np.ones(m - 1), 1)
    return expm(t * j)[0].real


def alpha_interp(sys: AlphaSystem, t):
    """Solve ``sum_k alpha_k nu_l^k = exp(t nu_l)`` for every root ``nu_l``.

    The Vandermonde system is solved in Newton form. For the dephasing
    generator all roots are <= 0, so the Newton basis polynomials
    ``prod (z - nu_l)`` have nonnegative coefficients and the divided
    differences of ``exp(t z)`` are positive: the conversion to monomial
    coefficients is free of cancellation.
    """
    roots = np.asarray(sys.roots, dtype=float)
    if roots.size > 1 and np.min(np.abs(np.subtract.outer(roots, roots)) + np.eye(roots.size)) == 0:
        raise ValueError("repeated roots are not supported")
    if t < 0:
        raise ValueError("time must be nonnegative")
    # largest root first keeps the Newton nodes ordered 0, -|nu|, ...
    x = np.sort(roots)[::-1]
    dd = exp_divided_differences(x, t)
    m = x.size
    coeffs = np.zeros(m)
    coeffs[0] = dd[m - 1]
    for k in range(m - 2, -1, -1):
        shifted = np.zeros(m)
        shifted[1:] = coeffs[:-1]
        coeffs = shifted - x[k] * coeffs
        coeffs[0] += dd[k]
    return coeffs


def alpha_matrix(sys: AlphaSystem, t_points, method="interp", tol=DEFAULT_ODE_TOL):
    """Rows ``alpha(t_j)`` for every requested instant."""
    if method == "interp":
        return np.array([alpha_interp(sys, float(t)) for t in _check_times(t_points)])
    if method == "ode":
        return alpha_ode(sys, t_points, tol)
    raise ValueError(f"unknown alpha method {method!r}")


def flow_from_alpha(alpha, superop):
    """``sum_k alpha_k L^k``."""
    s = np.asarray(superop)
    out = np.zeros_like(s, dtype=complex)
    power = np.eye(s.shape[0], dtype=complex)
    for a in alpha:
        out += a * power
        power = power @ s
    return out


def grid_determinant(sys: AlphaSystem, grid: TimeGrid, method="interp"):
    """``det[alpha_k(c_j t)]``, rows indexed by instant, columns by k."""
    if grid.c_list.size != sys.m:
        raise ValueError(f"grid has {grid.c_list.size} instants, need m = {sys.m}")
    return float(np.linalg.det(alpha_matrix(sys, grid.instants, method)))


def _series_coefficients(sys: AlphaSystem, order):
    """Exact Taylor coefficients of alpha_k at 0, ``a[k][n]``, n <= order.

    ``alpha^(n)(0) = C^n e_0`` for the companion matrix C; the floats
    ``d_k`` are converted to exact rationals first.
    """
    m = sys.m
    d = [Fraction(float(x)) for x in sys.d_coeffs]
    vec = [Fraction(1)] + [Fraction(0)] * (m - 1)
    coeffs = [[Fraction(0)] * (order + 1) for _ in range(m)]
    fact = 1
    for n in range(order + 1):
        if n:
            fact *= n
        for k in range(m):
            coeffs[k][n] = vec[k] / fact
        last = vec[m - 1]
        vec = [d[0] * last] + [vec[k - 1] + d[k] * last for k in range(1, m)]
    return coeffs


def _series_mul(a, b, order):
    out = [Fraction(0)] * (order + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j in range(order + 1 - i):
            if b[j]:
                out[i + j] += ai * b[j]
    return out


@dataclass(frozen=True)
class TaylorTerm:
    order: int
    derivative: float
    series_coefficient: Fraction

    @property
    def coefficient(self):
        """The derivative ``alpha^(order)(0)`` as a float."""
        return self.derivative


def taylor_lowest_order(sys: AlphaSystem, c_list, max_order=None):
    """First nonvanishing Taylor term of ``t -> det[alpha_k(c_j t)]`` at 0.

    The determinant is expanded exactly (rational arithmetic, Leibniz
    formula on truncated series). Returns the order, the derivative of that
    order at 0 and the exact series coefficient.
    """
    c = [Fraction(float(x)) for x in np.asarray(c_list, dtype=float)]
    m = sys.m
    if len(c) != m:
        raise ValueError(f"need {m} ratios, got {len(c)}")
    if any(b <= a for a, b in zip(c, c[1:])):
        raise ValueError("c_list must be strictly increasing")
    order = m * (m - 1) // 2 if max_order is None else max_order
    a = _series_coefficients(sys, order)
    # entry (j, k): alpha_k(c_j t) = sum_n a[k][n] c_j^n t^n
    entries = [
        [[a[k][n] * c[j] ** n for n in range(order + 1)] for k in range(m)] for j in range(m)
    ]
    det = [Fraction(0)] * (order + 1)
    for perm in permutations(range(m)):
        sign = _perm_sign(perm)
        term = [Fraction(1)] + [Fraction(0)] * order
        for j, k in enumerate(perm):
            term = _series_mul(term, entries[j][k], order)
        for n in range(order + 1):
            det[n] += sign * term[n]
    for n, coef in enumerate(det):
        if coef != 0:
            return TaylorTerm(n, float(coef * math.factorial(n)), coef)
    raise ValueError(f"determinant vanishes to order {order}; c_list is degenerate")


def _perm_sign(perm):
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


@dataclass(frozen=True)
class TimeSelection:
    t_star: float
    det_value: float
    zero_locations: list[float]
    grid: TimeGrid

    def to_json(self):
        return {
            "t_star": self.t_star,
            "det_value": self.det_value,
            "zero_locations": list(self.zero_locations),
            "c": [float(x) for x in self.grid.c_list],
        }


def select_time_scale(sys: AlphaSystem, c_list=None, horizon=1.0, samples=400, method="interp"):
    """Scan ``t in (0, horizon / c_m]`` for the largest ``|det[alpha_k(c_j t)]|``.

    Zeros of the determinant are reported as sign changes (refined by
    bracketing) and as interior local minima of ``|det|`` that fall below
    ``1e-8`` of the maximum. For m >= 2 the rows coincide at t = 0, so
    0 is always a zero. Samples whose ``|det|`` is below its roundoff bound
    (reached when all modes but the slowest have decayed) are not used for
    zero detection. For m = 1 the determinant is 1 everywhere and the
    midpoint of the window is returned.
    """
    m = sys.m
    c = uniform_c_list(m) if c_list is None else np.asarray(c_list, dtype=float)
    if c.size != m:
        raise ValueError(f"c_list has {c.size} entries, need m = {m}")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    t_max = horizon / c[-1]
    if m == 1:
        # alpha_0 = 1 identically: every instant is valid
        return TimeSelection(t_max / 2, 1.0, [], TimeGrid(c, t_max / 2))
    ts = np.linspace(t_max / samples, t_max, samples)

    def det_at(t):
        return float(np.linalg.det(alpha_matrix(sys, c * t, method)))

    def det_and_noise(t):
        # noise: roundoff level of the determinant, Hadamard bound times 64 eps
        rows = alpha_matrix(sys, c * t, method)
        bound = 64 * np.finfo(float).eps * float(np.prod(np.linalg.norm(rows, axis=1)))
        return float(np.linalg.det(rows)), bound

    dets, noise = np.array([det_and_noise(t) for t in ts]).T
    peak = int(np.argmax(np.abs(dets)))
    if abs(dets[peak]) < DET_FLOOR:
        raise SingularGridError(
            f"all sampled grid determinants are below {DET_FLOOR:g}; max |det| = {abs(dets[peak]):.3g}"
        )
    neg = lambda t: -abs(det_at(t))
    lo = ts[max(peak - 1, 0)]
    hi = ts[min(peak + 1, samples - 1)]
    t_star, det_star = ts[peak], dets[peak]
    if hi > lo:
        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if -res.fun >= abs(det_star):
            t_star, det_star = float(res.x), det_at(float(res.x))

    # where |det| sits at roundoff level its sign carries no information
    resolved = np.abs(dets) > noise
    zeros = [0.0]
    scale = np.max(np.abs(dets))
    for i in range(samples - 1):
        a, b = dets[i], dets[i + 1]
        if not (resolved[i] and resolved[i + 1]):
            continue
        if a * b < 0:
            zeros.append(float(brentq(det_at, ts[i], ts[i + 1], xtol=1e-14)))
    absd = np.abs(dets)
    for i in range(1, samples - 1):
        if absd[i] <= absd[i - 1] and absd[i] <= absd[i + 1] and absd[i] < 1e-8 * scale:
            if resolved[i - 1] and resolved[i + 1] and dets[i - 1] * dets[i + 1] > 0:
                zeros.append(float(ts[i]))
    zeros = sorted(set(zeros))
    return TimeSelection(float(t_star), float(det_star), zeros, TimeGrid(c, float(t_star)))
