"""Analytic model of a toral left-invertible tuple on an E-valued RKHS over a polydisc.

``U_f(z) = sum_k (P S'^{*k} f) z^k`` with ``P`` the projection onto the joint
kernel ``E = chi_[0, t_min) L^2``. The reproducing kernel is diagonal in the
multi-index, ``k(z, lam) = sum_n c_n(x) z^n conj(lam)^n`` with
``c_n = P S'^{*n} S'^n |_E`` acting on ``E`` as a multiplication.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DualNotCommuting, OutsidePolydisc, TruncationExceedsGrid
from .grid_operator import adjoint, apply, compose
from .tuples import (
    PowerCache,
    box,
    check_kernel_condition,
    multi_indices,
    spherical_cauchy_dual,
    toral_cauchy_dual,
    unit_basis,
)


@dataclass(frozen=True)
class KernelSeries:
    """Coefficients ``c_n`` on ``E``'s grid points for ``|n|_inf <= N``.

    ``tail_ratio[j]`` is the largest observed ``c_{n+e_j} / c_n``; it drives the
    geometric tail bound reported with every kernel value.
    """

    tuple: object
    N: int
    coefficients: dict
    k_min: int
    inner_radius: np.ndarray
    tail_ratio: np.ndarray
    kernel_condition: bool

    @property
    def d(self):
        return len(self.tail_ratio)

    def x_index(self, x):
        j = self.tuple.grid.index(x)
        if j >= self.k_min:
            raise OutsidePolydisc(f"x={x} is outside the support [0, t_min) of E")
        return j

    def as_dict(self):
        return {"N": self.N, "kMin": self.k_min, "innerRadius": self.inner_radius.tolist(),
                "tailRatio": self.tail_ratio.tolist(), "kernelCondition": self.kernel_condition,
                "c0Deviation": float(np.max(np.abs(self.coefficients[(0,) * self.d] - 1.0)))}


def kernel_coefficients(tt, N, alpha_max=None, inner_radius=None):
    """``c_n(x)`` read off the shift-0 term of ``S'^{*n} S'^n`` on ``[0, t_min)``.

    The kernel condition is evaluated (with ``alpha_max``, default ``(N,..,N)``)
    and recorded on the series; the coefficients themselves do not depend on it.
    """
    tt.require_commuting()
    grid = tt.grid
    if tt.shift_of((N,) * tt.d) + tt.k_min > grid.n:
        raise TruncationExceedsGrid(f"lattice bound N={N} pushes E past the grid")
    duals = toral_cauchy_dual(tt).ops
    power = PowerCache(duals)
    coeffs = {}
    for n in box(tt.d, N):
        op = power(n)
        c = compose(adjoint(op), op)
        coeffs[n] = np.asarray(c.multiplier(0)[: tt.k_min], dtype=float)
    ratio = np.zeros(tt.d)
    for n, c in coeffs.items():
        for j in range(tt.d):
            if n[j] < N:
                nxt = coeffs[tuple(v + (i == j) for i, v in enumerate(n))]
                ratio[j] = max(ratio[j], float(np.max(nxt / c)))
    if alpha_max is None:
        alpha_max = (min(N, 3),) * tt.d
    try:
        kc = check_kernel_condition(tt, alpha_max).holds
    except TruncationExceedsGrid:
        kc = False
    if inner_radius is None:
        from .spectrum import polydisc_bounds

        inner_radius = polydisc_bounds(tt).inner
    return KernelSeries(tt, N, coeffs, tt.k_min, np.asarray(inner_radius, dtype=float), ratio, kc)


def four_factor_coefficient(tt, n):
    """Closed-form ``c_n`` for a pair: product of four square-root ratios of symbol values."""
    if tt.d != 2:
        raise ValueError("four-factor formula is for pairs")
    phi1, phi2 = tt.phi
    k1, k2 = tt.steps
    n1, n2 = n
    x = np.arange(tt.k_min)
    a, b = n1 * k1, n2 * k2
    val = np.sqrt(phi1[x] / phi1[x + a]) * np.sqrt(phi2[x + a] / phi2[x + a + b]) \
        * np.sqrt(phi1[x + b] / phi1[x + a + b]) * np.sqrt(phi2[x] / phi2[x + b])
    return val / (tt.scale[0] ** (2 * n1) * tt.scale[1] ** (2 * n2))


def diagonal_orthogonality(tt, N):
    """Largest ``|P S'^{*j} S'^k|_E|`` over ``j != k`` in the lattice box."""
    tt.require_commuting()
    if tt.shift_of((N,) * tt.d) + tt.k_min > tt.grid.n:
        raise TruncationExceedsGrid(f"lattice bound N={N} pushes E past the grid")
    power = PowerCache(toral_cauchy_dual(tt).ops)
    worst, where = 0.0, None
    lattice = box(tt.d, N)
    for j in lattice:
        adj = adjoint(power(j))
        for k in lattice:
            if j == k:
                continue
            op = compose(adj, power(k))
            for e in range(tt.k_min):
                v = apply(op, unit_basis(tt.grid, e))[: tt.k_min]
                val = float(np.max(np.abs(v))) * math.sqrt(tt.grid.h)
                if val > worst:
                    worst, where = val, (j, k)
    return worst, where


@dataclass(frozen=True)
class KernelValue:
    value: complex
    tail_bound: float


def _check_inside(series, *points):
    r = series.inner_radius
    for z in points:
        if z.shape != (series.d,):
            raise OutsidePolydisc(f"point must have {series.d} coordinates")
        if np.any(np.abs(z) >= r):
            raise OutsidePolydisc(f"point {z} is not inside the polydisc of radius {r}")


def evaluate_kernel(series, z, lam, x):
    """Truncated ``sum_{|n|_inf <= N} c_n(x) z^n conj(lam)^n`` with a geometric tail bound.

    The bound assumes the observed per-axis ratio ``c_{n+e_j}/c_n <= tail_ratio[j]``
    persists beyond ``N``; it is infinite when that ratio times ``|z_j lam_j|``
    reaches 1. A floating-point rounding allowance is included.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    _check_inside(series, z, lam)
    j = series.x_index(x)
    w = z * np.conj(lam)
    total = 0j
    mass = 0.0
    for n, c in series.coefficients.items():
        term = c[j] * np.prod(w ** np.array(n))
        total += term
        mass += abs(term)
    q = series.tail_ratio * np.abs(w)
    if np.any(q >= 1):
        tail = math.inf
    else:
        # prod 1/(1-q) - prod (1-q^{N+1})/(1-q), without cancellation
        full = float(np.prod(1.0 / (1.0 - q)))
        kept = -math.expm1(float(np.sum(np.log1p(-(q ** (series.N + 1))))))
        tail = full * kept * float(np.max(series.coefficients[(0,) * series.d][j]))
    tail += 64 * np.finfo(float).eps * mass
    return KernelValue(complex(total), float(tail))


@dataclass(frozen=True)
class PolydiscSample:
    points: np.ndarray
    radius: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim != 2 or pts.shape[1] != len(self.radius):
            raise ValueError("points must be an (m, d) array")
        if np.any(np.abs(pts) >= np.asarray(self.radius)):
            raise OutsidePolydisc("sample points must lie strictly inside the polydisc")


def sample_polydisc(radius, m, rho=0.9, rng=None):
    """``m`` random points with ``|z_i| <= rho * radius_i``."""
    rng = np.random.default_rng(rng)
    radius = np.asarray(radius, dtype=float)
    mod = rho * radius * np.sqrt(rng.uniform(size=(m, len(radius))))
    arg = rng.uniform(0, 2 * np.pi, size=(m, len(radius)))
    return PolydiscSample(mod * np.exp(1j * arg), radius)


@dataclass(frozen=True)
class PSDReport:
    min_eigenvalue: float
    trace: float
    hermitian_residual: float
    tol: float

    @property
    def psd(self):
        return self.min_eigenvalue >= -self.tol * self.trace

    def as_dict(self):
        return {"minEigenvalue": self.min_eigenvalue, "trace": self.trace,
                "hermitianResidual": self.hermitian_residual, "tol": self.tol, "psd": self.psd}


def kernel_gram(series, points, x):
    pts = np.asarray(points, dtype=complex)
    m = len(pts)
    G = np.zeros((m, m), dtype=complex)
    for a in range(m):
        for b in range(m):
            G[a, b] = evaluate_kernel(series, pts[a], pts[b], x).value
    return G


def check_psd(series, samples, x, tol=1e-9):
    pts = samples.points if isinstance(samples, PolydiscSample) else np.asarray(samples)
    G = kernel_gram(series, pts, x)
    herm = float(np.max(np.abs(G - G.conj().T)))
    eig = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    return PSDReport(float(eig[0]), float(np.trace(G).real), herm, tol)


@dataclass(frozen=True)
class ModelCoefficients:
    """``P S'^{*k} f`` on ``E``'s grid points for ``|k|_inf <= N``."""

    N: int
    coefficients: dict
    k_min: int

    def __getitem__(self, k):
        return self.coefficients[tuple(k)]

    def evaluate(self, z):
        """``U_f(z)`` as samples on ``[0, t_min)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(self.k_min, dtype=complex)
        for k, c in self.coefficients.items():
            out += c * np.prod(z ** np.array(k))
        return out


def model_map(tt, f, N):
    """Coefficient lattice of ``U_f``; projection onto ``E`` is restriction to ``[0, t_min)``."""
    tt.require_commuting()
    grid = tt.grid
    if tt.shift_of((N,) * tt.d) + tt.k_min > grid.n:
        raise TruncationExceedsGrid(f"lattice bound N={N} reads f past the grid")
    power = PowerCache(toral_cauchy_dual(tt).ops)
    coeffs = {}
    for k in box(tt.d, N):
        v = apply(adjoint(power(k)), f)
        coeffs[k] = np.array(v[: tt.k_min])
    return ModelCoefficients(N, coeffs, tt.k_min)


def model_norm_squared(coeffs, series):
    """``sum_k <coef_k / c_k, coef_k>``: the model norm when ``{S'^k E}`` are orthogonal."""
    h = series.tuple.grid.h
    total = 0.0
    for k, v in coeffs.coefficients.items():
        total += h * float(np.sum(np.abs(v) ** 2 / series.coefficients[k]))
    return total


@dataclass(frozen=True)
class IntertwiningReport:
    residuals: tuple  # per coordinate j
    worst_index: tuple
    tol: float

    @property
    def passed(self):
        return max(self.residuals) <= self.tol

    def as_dict(self):
        return {"residuals": list(self.residuals), "worstIndex": [list(w) if w else None for w in self.worst_index],
                "tol": self.tol, "passed": self.passed}


def check_intertwining(tt, f, N, tol=1e-10):
    """Compare the lattice of ``U(S_j f)`` with the ``e_j``-shifted lattice of ``U f``.

    ``f`` must leave room for one more translation; residuals are relative to
    ``max(1, ||f||_inf)`` over ``|k|_inf <= N - 1``.
    """
    f = np.asarray(f)
    base = model_map(tt, f, N)
    scale = max(1.0, float(np.max(np.abs(f))))
    residuals, worst_at = [], []
    for j, op in enumerate(tt.ops):
        sf = apply(op, f)
        if np.any(f[tt.grid.n - tt.steps[j]:]):
            raise TruncationExceedsGrid("f is too close to the right edge to translate")
        shifted = model_map(tt, sf, N)
        worst, where = 0.0, None
        for k in box(tt.d, N - 1):
            target = base[tuple(v - (i == j) for i, v in enumerate(k))] if k[j] else 0.0
            res = float(np.max(np.abs(shifted[k] - target))) / scale
            if res > worst:
                worst, where = res, k
        residuals.append(worst)
        worst_at.append(where)
    return IntertwiningReport(tuple(residuals), tuple(worst_at), tol)


@dataclass(frozen=True)
class SphericalConditionReport:
    alpha_max: tuple
    entries: tuple  # (j, alpha, residual, passed)
    a_coefficients: dict
    tol: float

    @property
    def holds(self):
        return all(e[3] for e in self.entries)

    def failing(self):
        return [(j, a) for j, a, _, ok in self.entries if not ok]

    def as_dict(self):
        return {
            "alphaMax": list(self.alpha_max),
            "holds": self.holds,
            "tol": self.tol,
            "table": [{"j": j, "alpha": list(a), "residual": r, "passed": ok} for j, a, r, ok in self.entries],
            "a": [{"alpha": list(a), "value": v} for a, v in self.a_coefficients.items()],
        }


def spherical_weights(d, alpha):
    """``(d + |alpha| - 1)! / ((d - 1)! alpha!)``."""
    return math.factorial(d + sum(alpha) - 1) // (math.factorial(d - 1) * math.prod(math.factorial(a) for a in alpha))


def spherical_model_condition(tt, alpha_max, tol=1e-10):
    """Residual table of ``S_j^* S^{s alpha} g = alpha_j/(d+|alpha|-1) S^{s(alpha-e_j)} g`` on ``E``."""
    tt.require_commuting()
    if isinstance(alpha_max, int):
        alpha_max = (alpha_max,) * tt.d
    dual = spherical_cauchy_dual(tt)
    if not dual.commutes:
        raise DualNotCommuting(f"spherical dual does not commute (residual {dual.commutation.max_residual:.3g})")
    grid = tt.grid
    d = tt.d
    power = PowerCache(dual.ops)
    basis = [unit_basis(grid, e) for e in range(tt.k_min)]
    entries = []
    a_coeffs = {}
    for alpha in multi_indices(alpha_max):
        a_coeffs[alpha] = spherical_weights(d, alpha)
        if tt.shift_of(alpha) + tt.k_min > power(alpha).safe_size:
            raise TruncationExceedsGrid(f"alpha={alpha} leaves the exact window of the spherical dual")
        for j in range(d):
            adj = tt.adjoints[j]
            res = 0.0
            for g in basis:
                lhs = apply(adj, apply(power(alpha), g))
                if alpha[j]:
                    lower = tuple(v - (i == j) for i, v in enumerate(alpha))
                    rhs = alpha[j] / (d + sum(alpha) - 1) * apply(power(lower), g)
                else:
                    rhs = 0.0
                res = max(res, float(np.sqrt(grid.h * np.sum(np.abs(lhs - rhs) ** 2))))
            entries.append((j, alpha, res, res <= tol))
    return SphericalConditionReport(tuple(alpha_max), tuple(entries), a_coeffs, tol)
