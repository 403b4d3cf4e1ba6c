import math

import numpy as np
import pytest

from semigroup_lab.errors import DualNotCommuting, OutsidePolydisc, TruncationExceedsGrid
from semigroup_lab.grid import GridSpec
from semigroup_lab.grid_operator import apply
from semigroup_lab.rkhs import (
    PolydiscSample,
    check_intertwining,
    check_psd,
    diagonal_orthogonality,
    evaluate_kernel,
    four_factor_coefficient,
    kernel_coefficients,
    model_map,
    model_norm_squared,
    sample_polydisc,
    spherical_model_condition,
    spherical_weights,
)
from semigroup_lab.symbol import SymbolSpec
from semigroup_lab.tuples import TranslationTuple, unit_basis

from conftest import CATALOG

GRID = GridSpec.from_extent(0.25, 64)


def tup(*names, t=None, scale=None):
    t = t or [1.0, 1.5][: len(names)]
    return TranslationTuple([CATALOG[n] for n in names], t, GRID, scale)


def constants():
    return TranslationTuple([SymbolSpec.constant(1.0), SymbolSpec.constant(3.0)], [1.0, 1.5], GRID)


def test_constant_coefficients_are_one():
    s = kernel_coefficients(constants(), 6)
    for c in s.coefficients.values():
        np.testing.assert_allclose(c, 1.0, rtol=0, atol=1e-15)
    assert s.inner_radius.tolist() == [1.0, 1.0]


def test_equal_symbols_closed_form():
    tt = tup("log-shift", "log-shift")
    s = kernel_coefficients(tt, 8)
    x = GRID.x[:4]
    for (n1, n2), c in s.coefficients.items():
        expected = np.log(x + 2) / np.log(x + 2 + n1 * 1.0 + n2 * 1.5)
        np.testing.assert_allclose(c, expected, rtol=1e-12)


@pytest.mark.parametrize("names", [("constant", "exp-1"), ("exp-minus-1", "exp-1"), ("affine", "affine")])
def test_four_factor_formula(names):
    tt = tup(*names)
    s = kernel_coefficients(tt, 6)
    for n, c in s.coefficients.items():
        assert np.max(np.abs(c - four_factor_coefficient(tt, n))) <= 1e-12


def test_scaled_four_factor():
    tt = tup("log-shift", "log-shift", scale=[0.5, 2.0])
    s = kernel_coefficients(tt, 4)
    for n, c in s.coefficients.items():
        np.testing.assert_allclose(c, four_factor_coefficient(tt, n), rtol=1e-12)


def test_truncation_guard():
    with pytest.raises(TruncationExceedsGrid):
        kernel_coefficients(tup("log-shift", "log-shift"), 30)


def test_geometric_kernel_value():
    s = kernel_coefficients(constants(), 16)
    v = evaluate_kernel(s, [0.5, 0.5], [0.5, 0.5], 0.0)
    assert abs(v.value - 16 / 9) <= v.tail_bound
    partial = sum(0.25 ** n for n in range(17)) ** 2
    assert v.value.real == pytest.approx(partial, rel=1e-14)


def test_kernel_at_origin_and_symmetry(rng):
    s = kernel_coefficients(tup("log-shift", "log-shift"), 8)
    assert evaluate_kernel(s, [0, 0], [0.3, 0.2j], 0.25).value == 1.0
    pts = sample_polydisc(s.inner_radius, 5, 0.9, rng).points
    for a in pts:
        for b in pts:
            ab = evaluate_kernel(s, a, b, 0.5).value
            ba = evaluate_kernel(s, b, a, 0.5).value
            assert abs(ab - np.conj(ba)) <= 1e-14 * max(1, abs(ab))


def test_brute_force_exp_pair():
    # phi1 = phi2 = e^{-x}: c_n = e^{n1 t1 + n2 t2}
    tt = tup("exp-minus-1", "exp-minus-1")
    s = kernel_coefficients(tt, 10)
    z = np.array([0.2 + 0.1j, -0.15j])
    lam = np.array([0.1, 0.2 - 0.05j])
    w = z * np.conj(lam)
    brute = sum(math.exp(n1 * 1.0 + n2 * 1.5) * w[0] ** n1 * w[1] ** n2
                for n1 in range(11) for n2 in range(11))
    v = evaluate_kernel(s, z, lam, 0.75)
    assert abs(v.value - brute) <= 1e-13 * abs(brute)
    assert s.tail_ratio == pytest.approx([math.e, math.exp(1.5)], rel=1e-12)
    # the full series sum lies within the reported tail
    full = 1 / ((1 - math.e * w[0]) * (1 - math.exp(1.5) * w[1]))
    assert abs(v.value - full) <= v.tail_bound


def test_outside_polydisc():
    s = kernel_coefficients(constants(), 4)
    with pytest.raises(OutsidePolydisc):
        evaluate_kernel(s, [1.0, 0.0], [0.1, 0.1], 0.0)
    with pytest.raises(OutsidePolydisc):
        evaluate_kernel(s, [0.1, 0.1], [0.1, 0.1], 1.0)  # x outside [0, t_min)
    with pytest.raises(OutsidePolydisc):
        PolydiscSample(np.array([[1.2, 0]]), np.array([1.0, 1.0]))


def test_monotone_truncation():
    tt = tup("log-shift", "log-shift")
    z = [0.4, 0.3]
    values = [evaluate_kernel(kernel_coefficients(tt, N), z, z, 0.0).value.real for N in (2, 4, 8)]
    assert values[0] <= values[1] <= values[2]


@pytest.mark.parametrize("tt", [constants(), tup("log-shift", "log-shift"), tup("log-shift")])
def test_psd(tt, rng):
    s = kernel_coefficients(tt, 8)
    rep = check_psd(s, sample_polydisc(s.inner_radius, 8, 0.9, rng), 0.0)
    assert rep.psd and rep.hermitian_residual <= 1e-12
    one = check_psd(s, sample_polydisc(s.inner_radius, 1, 0.9, rng), 0.0)
    assert one.min_eigenvalue > 0


def test_model_map_basics(rng):
    tt = tup("log-shift")
    g = np.zeros(GRID.n)
    g[:4] = rng.standard_normal(4)
    coeffs = model_map(tt, g, 10)
    np.testing.assert_array_equal(coeffs[(0,)], g[:4])
    zero = model_map(tt, np.zeros(GRID.n), 5)
    assert all(not np.any(c) for c in zero.coefficients.values())
    # U(S g) has no constant term
    sg = model_map(tt, apply(tt.ops[0], g), 5)
    assert not np.any(sg[(0,)])


def test_model_is_norm_preserving_single():
    tt = tup("sqrt-affine")
    N = 12
    f = np.zeros(GRID.n)
    f[: 4 * (N + 1)] = np.cos(GRID.x[: 4 * (N + 1)])
    coeffs = model_map(tt, f, N)
    s = kernel_coefficients(tt, N)
    assert model_norm_squared(coeffs, s) == pytest.approx(GRID.h * np.sum(f ** 2), rel=1e-12)


def test_reproducing_identity_single(rng):
    tt = tup("log-shift")
    N = 12
    s = kernel_coefficients(tt, N)
    f = np.zeros(GRID.n)
    f[: 4 * (N + 1)] = rng.standard_normal(4 * (N + 1))
    coeffs = model_map(tt, f, N)
    g = rng.standard_normal(4)
    lam = 0.4 - 0.2j
    # <U_f, k(., lam) g>_H on the lattice, weights 1/c_k
    lhs = sum(GRID.h * np.sum(coeffs[k] * np.conj(s.coefficients[k] * np.conj(lam) ** k[0] * g) / s.coefficients[k])
              for k in coeffs.coefficients)
    rhs = GRID.h * np.sum(coeffs.evaluate([lam]) * np.conj(g))
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(rhs))


def test_intertwining_single(rng):
    tt = tup("moebius-0.5")
    f = np.zeros(GRID.n)
    f[:200] = rng.standard_normal(200)
    rep = check_intertwining(tt, f, 4)
    assert rep.passed
    assert max(check_intertwining(tt, np.zeros(GRID.n), 4).residuals) == 0


def test_diagonal_orthogonality():
    assert diagonal_orthogonality(tup("log-shift"), 4)[0] <= 1e-12
    # for pairs S'^(1,0) E and S'^(0,1) E overlap, so the off-diagonal block survives
    worst, where = diagonal_orthogonality(tup("log-shift", "log-shift"), 3)
    assert worst > 0.1 and where is not None


def test_spherical_weights():
    assert spherical_weights(2, (1, 1)) == 6
    assert spherical_weights(2, (2, 0)) == 3
    assert spherical_weights(3, (0, 0, 0)) == 1


def test_spherical_model_toral_isometry_entry():
    rep = spherical_model_condition(constants(), (1, 1))
    table = {(j, a): ok for j, a, _, ok in rep.entries}
    assert table[(0, (1, 0))] and table[(1, (0, 1))]
    assert rep.a_coefficients[(1, 1)] == 6


def test_spherical_model_refuses_non_commuting_dual():
    with pytest.raises(DualNotCommuting):
        spherical_model_condition(tup("log-shift", "log-shift"), 2)


def test_spherical_model_single_operator():
    # d = 1: S^s = S', and S* S'^a g = S'^(a-1) g
    rep = spherical_model_condition(tup("log-shift"), 4)
    assert rep.holds


def test_unit_basis_norm():
    e = unit_basis(GRID, 2)
    assert GRID.h * np.sum(e ** 2) == pytest.approx(1.0)
