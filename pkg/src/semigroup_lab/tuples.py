"""Commuting tuples of weighted translations: defects, Cauchy duals and structure checks."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NotCommuting,
    NotJointlyLeftInvertible,
    NotLeftInvertible,
    TooLarge,
    TruncationExceedsGrid,
    WindowTooSmall,
)
from .grid_operator import (
    OperatorExpr,
    ShiftTerm,
    adjoint,
    apply,
    compose,
    make_weighted_translation,
    norm,
    to_dense,
)

DEFAULT_COMMUTE_TOL = 1e-10
DEFAULT_ALPHA = 1e-8


# ---------------------------------------------------------------------------
# tuples and multi-indices
# ---------------------------------------------------------------------------

def multi_indices(bounds):
    """All multi-indices ``0 <= n <= bounds`` componentwise, in lexicographic order."""
    return list(itertools.product(*(range(b + 1) for b in bounds)))


def box(d, radius):
    return multi_indices((radius,) * d)


def multinomial_sign_binom(n, p):
    """``(-1)^|p| * prod C(n_i, p_i)``."""
    return (-1) ** sum(p) * math.prod(math.comb(a, b) for a, b in zip(n, p))


@dataclass(frozen=True)
class PairCommutation:
    i: int
    j: int
    ratio_residual: float
    operator_residual: float
    commutes: bool


@dataclass(frozen=True)
class CommutationReport:
    pairs: tuple
    tol: float

    @property
    def commutes(self):
        return all(p.commutes for p in self.pairs)

    @property
    def max_residual(self):
        return max((max(p.ratio_residual, p.operator_residual) for p in self.pairs), default=0.0)

    def pair(self, i, j):
        for p in self.pairs:
            if (p.i, p.j) == (i, j):
                return p
        raise KeyError((i, j))

    def as_dict(self):
        return {
            "commutes": self.commutes,
            "tol": self.tol,
            "maxResidual": self.max_residual,
            "pairs": [
                {"i": p.i, "j": p.j, "ratioResidual": p.ratio_residual,
                 "operatorResidual": p.operator_residual, "commutes": p.commutes}
                for p in self.pairs
            ],
        }


class TranslationTuple:
    """``d`` weighted translations ``S_i`` with symbols ``phi_i`` and steps ``t_i`` on one grid.

    ``scale`` multiplies each generator (``scale_spherical`` uses ``1/sqrt(d)``).
    Commutativity is checked once at construction.
    """

    def __init__(self, symbols, t, grid, scale=None, tol=DEFAULT_COMMUTE_TOL):
        symbols = tuple(symbols)
        t = tuple(float(v) for v in t)
        if not symbols or len(symbols) != len(t):
            raise ValueError("need one translation per symbol")
        self.symbols = symbols
        self.t = t
        self.grid = grid
        self.scale = tuple(float(s) for s in (scale if scale is not None else (1.0,) * len(t)))
        if len(self.scale) != len(t):
            raise ValueError("need one scale per symbol")
        self.steps = tuple(grid.steps(v) for v in t)
        self.phi = tuple(s.on_grid(grid) for s in symbols)
        self.ops = tuple(
            make_weighted_translation(s, v, grid, c) for s, v, c in zip(symbols, t, self.scale)
        )
        self.adjoints = tuple(adjoint(op) for op in self.ops)
        self.commute_tol = tol
        self.commutation = check_commuting(self, tol)

    @property
    def d(self):
        return len(self.t)

    @property
    def commutes(self):
        return self.commutation.commutes

    @property
    def k_min(self):
        return min(self.steps)

    @property
    def t_min(self):
        return self.k_min * self.grid.h

    def shift_of(self, k):
        """Total grid shift of ``S^k``."""
        return sum(a * b for a, b in zip(k, self.steps))

    def require_commuting(self):
        if not self.commutes:
            raise NotCommuting(f"tuple does not commute (residual {self.commutation.max_residual:.3g})")

    def with_scale(self, scale):
        return TranslationTuple(self.symbols, self.t, self.grid, scale, self.commute_tol)

    def describe(self):
        return {
            "symbols": [s.to_dict() for s in self.symbols],
            "t": list(self.t),
            "scale": list(self.scale),
        }

    def __repr__(self):
        return f"TranslationTuple({list(self.symbols)}, t={self.t}, scale={self.scale})"


def ops_power(ops, k):
    """``ops[0]^k[0] ... ops[d-1]^k[d-1]`` as one operator."""
    grid = ops[0].grid
    out = OperatorExpr.identity(grid)
    for op, e in zip(ops, k):
        out = compose(out, op.power(e))
    return out


class PowerCache:
    """Memoized ``ops^k`` for a commuting family; each new index costs one composition."""

    def __init__(self, ops):
        self.ops = tuple(ops)
        self.grid = self.ops[0].grid
        self._cache = {}

    def __call__(self, k):
        k = tuple(k)
        if k in self._cache:
            return self._cache[k]
        if not any(k):
            out = OperatorExpr.identity(self.grid)
        else:
            i = next(idx for idx, v in enumerate(k) if v)
            prev = self(tuple(v - (idx == i) for idx, v in enumerate(k)))
            out = compose(self.ops[i], prev)
        self._cache[k] = out
        return out


def _ratio_identity(phi_i, phi_j, ki, kj):
    """``phi_i(x) phi_j(x - t_i) / (phi_i(x - t_i) phi_j(x - t_i - t_j))`` for ``x >= t_i + t_j``."""
    s = ki + kj
    return phi_i[s:] * phi_j[kj:-ki] / (phi_i[kj:-ki] * phi_j[: len(phi_j) - s])


def check_commuting(tt, tol=DEFAULT_COMMUTE_TOL):
    """Pairwise commutation by the symbol ratio identity and by the operator commutator.

    Residuals are relative to ``max(1, |value|)`` of the compared quantities.
    """
    pairs = []
    n = tt.grid.n
    for i, j in itertools.permutations(range(tt.d), 2):
        ki, kj = tt.steps[i], tt.steps[j]
        if ki + kj < n:
            lhs = _ratio_identity(tt.phi[i], tt.phi[j], ki, kj)
            rhs = _ratio_identity(tt.phi[j], tt.phi[i], kj, ki)
            ratio_res = float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))))
        else:
            ratio_res = 0.0
        ab = compose(tt.ops[i], tt.ops[j])
        ba = compose(tt.ops[j], tt.ops[i])
        scale = max(1.0, *(float(np.max(np.abs(t.multiplier))) for t in ab.terms + ba.terms)) if (ab.terms or ba.terms) else 1.0
        op_res = ab.max_abs_difference(ba) / scale
        pairs.append(PairCommutation(i, j, ratio_res, op_res, ratio_res <= tol and op_res <= tol))
    return CommutationReport(tuple(pairs), tol)


# ---------------------------------------------------------------------------
# defect functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DefectFunction:
    """Multiplier of ``B(Q)(I)`` on the first ``window`` grid points.

    ``mass`` is the pointwise sum of absolute terms in the alternating sum,
    used to scale sign tolerances.
    """

    order: object
    values: np.ndarray
    mass: np.ndarray
    window: int

    def violates_nonpositive(self, tol):
        return float(np.max(self.values - tol * self.mass)) > 0

    def violates_nonnegative(self, tol):
        return float(np.max(-self.values - tol * self.mass)) > 0

    def vanishes(self, tol):
        return bool(np.all(np.abs(self.values) <= tol * self.mass))


def _gram_ratios(tt):
    """``Q_i(I) = S_i^* S_i`` multipliers on their exact windows."""
    out = []
    for op, adj in zip(tt.ops, tt.adjoints):
        q = compose(adj, op)
        out.append(np.asarray(q.multiplier(0)[: q.safe_size], dtype=float))
    return out


def _toral_powers(tt, top):
    """``Q^p(I) = Q_1^{p_1} ... Q_d^{p_d}(I)`` for every ``p <= top`` (truncated arrays)."""
    ratios = _gram_ratios(tt)
    n = tt.grid.n
    cache = {}
    for p in multi_indices(top):
        if not any(p):
            cache[p] = np.ones(n)
            continue
        # outermost map is Q_i for the first nonzero index
        i = next(idx for idx, v in enumerate(p) if v)
        prev = cache[tuple(v - (idx == i) for idx, v in enumerate(p))]
        k = tt.steps[i]
        length = len(prev) - k
        if length <= 0:
            raise WindowTooSmall(f"defect order {p} exhausts the grid")
        cache[p] = ratios[i][:length] * prev[k:]
    return cache


def toral_defect(tt, n, _cache=None):
    """``B_n(Q_t)(I)`` as a multiplier via ``Q_i(m)(x) = phi_i(x+t_i)/phi_i(x) m(x+t_i)``."""
    n = tuple(int(v) for v in n)
    if len(n) != tt.d or any(v < 0 for v in n):
        raise ValueError(f"order must be a {tt.d}-tuple of nonnegative integers")
    if not any(n):
        raise ValueError("defect at order 0 is the identity; orders must be nonzero")
    tt.require_commuting()
    powers = _cache if _cache is not None else _toral_powers(tt, n)
    window = tt.grid.n - tt.shift_of(n)
    if window <= 0:
        raise WindowTooSmall(f"defect order {n} exhausts the grid")
    values = np.zeros(window)
    mass = np.zeros(window)
    for p in multi_indices(n):
        c = multinomial_sign_binom(n, p)
        term = powers[p][:window]
        values += c * term
        mass += abs(c) * np.abs(term)
    return DefectFunction(n, values, mass, window)


def _spherical_powers(tt, top):
    ratios = _gram_ratios(tt)
    kmax = max(tt.steps)
    out = [np.ones(tt.grid.n)]
    for _ in range(top):
        prev = out[-1]
        length = len(prev) - kmax
        if length <= 0:
            raise WindowTooSmall("spherical defect order exhausts the grid")
        nxt = np.zeros(length)
        for r, k in zip(ratios, tt.steps):
            nxt += r[:length] * prev[k: k + length]
        out.append(nxt)
    return out


def spherical_defect(tt, p, _cache=None):
    """``B_p(Q_s)(I)`` with ``Q_s(m)(x) = sum_i phi_i(x+t_i)/phi_i(x) m(x+t_i)``."""
    if int(p) != p or p < 1:
        raise ValueError("spherical defect order must be a positive integer")
    p = int(p)
    tt.require_commuting()
    powers = _cache if _cache is not None else _spherical_powers(tt, p)
    window = len(powers[p])
    values = np.zeros(window)
    mass = np.zeros(window)
    for q in range(p + 1):
        c = (-1) ** q * math.comb(p, q)
        term = powers[q][:window]
        values += c * term
        mass += abs(c) * np.abs(term)
    return DefectFunction(p, values, mass, window)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderVerdict:
    order: int
    min_value: float
    max_value: float
    window: int
    isometry: bool
    expansion: bool
    contraction: bool


@dataclass(frozen=True)
class ModeReport:
    mode: str
    orders: tuple
    tol: float
    # toral only: sign verdicts over the whole lattice box [0, N]^d minus 0
    box_expansion: bool = True
    box_contraction: bool = True

    def order(self, p):
        return self.orders[p - 1]

    @property
    def isometry(self):
        return self.orders[0].isometry

    def p_isometry(self, p):
        return self.order(p).isometry

    def hyperexpansion(self, p):
        return all(o.expansion for o in self.orders[:p])

    def hypercontraction(self, p):
        return all(o.contraction for o in self.orders[:p])

    @property
    def complete_hyperexpansion(self):
        return self.hyperexpansion(len(self.orders)) and self.box_expansion

    @property
    def complete_hypercontraction(self):
        return self.hypercontraction(len(self.orders)) and self.box_contraction

    def as_dict(self):
        n = len(self.orders)
        return {
            "mode": self.mode,
            "ordersTested": n,
            "tol": self.tol,
            "isometry": self.isometry,
            "contraction": self.orders[0].contraction,
            "expansion": self.orders[0].expansion,
            "pIsometry": [p for p in range(1, n + 1) if self.p_isometry(p)],
            "hyperexpansionUpTo": max([p for p in range(n + 1) if self.hyperexpansion(p)]),
            "hypercontractionUpTo": max([p for p in range(n + 1) if self.hypercontraction(p)]),
            "completeHyperexpansion": self.complete_hyperexpansion,
            "completeHypercontraction": self.complete_hypercontraction,
            "orders": [
                {"order": o.order, "min": o.min_value, "max": o.max_value, "window": o.window,
                 "isometry": o.isometry, "expansion": o.expansion, "contraction": o.contraction}
                for o in self.orders
            ],
        }


@dataclass(frozen=True)
class ClassificationReport:
    toral: ModeReport
    spherical: ModeReport
    max_order: int
    tol: float
    constant_symbols: tuple

    @property
    def toral_isometry(self):
        return self.toral.isometry

    def as_dict(self):
        return {
            "toralIsometry": self.toral.isometry,
            "sphericalIsometry": self.spherical.isometry,
            "twoIsometry": self.toral.p_isometry(2) if self.max_order >= 2 else None,
            "toral": self.toral.as_dict(),
            "spherical": self.spherical.as_dict(),
            "maxOrder": self.max_order,
            "tol": self.tol,
            "constantSymbols": list(self.constant_symbols),
        }


def _order_verdict(order, defects, tol):
    return OrderVerdict(
        order=order,
        min_value=min(float(np.min(b.values)) for b in defects),
        max_value=max(float(np.max(b.values)) for b in defects),
        window=min(b.window for b in defects),
        isometry=all(b.vanishes(tol) for b in defects),
        expansion=not any(b.violates_nonpositive(tol) for b in defects),
        contraction=not any(b.violates_nonnegative(tol) for b in defects),
    )


def classify(tt, max_order=8, tol=1e-10):
    """Toral and spherical expansivity flags up to ``max_order``.

    Toral order ``p`` groups every ``B_n`` with ``|n| = p``; the whole lattice box
    ``|n|_inf <= max_order`` is also swept for the complete-hyperexpansion flags.
    Sign tests use ``tol`` times the pointwise absolute mass of each alternating sum.
    """
    tt.require_commuting()
    top = (max_order,) * tt.d
    powers = _toral_powers(tt, top)
    by_order = {}
    box_exp = box_con = True
    for n in multi_indices(top):
        if not any(n):
            continue
        b = toral_defect(tt, n, _cache=powers)
        if sum(n) <= max_order:
            by_order.setdefault(sum(n), []).append(b)
        box_exp &= not b.violates_nonpositive(tol)
        box_con &= not b.violates_nonnegative(tol)
    toral = ModeReport(
        "toral",
        tuple(_order_verdict(p, by_order[p], tol) for p in range(1, max_order + 1)),
        tol, bool(box_exp), bool(box_con),
    )
    sph_powers = _spherical_powers(tt, max_order)
    spherical = ModeReport(
        "spherical",
        tuple(_order_verdict(p, [spherical_defect(tt, p, _cache=sph_powers)], tol)
              for p in range(1, max_order + 1)),
        tol,
    )
    constant = tuple(bool(np.ptp(phi) <= tol * np.max(np.abs(phi))) for phi in tt.phi)
    return ClassificationReport(toral, spherical, max_order, tol, constant)


def scale_spherical(tt):
    """The family ``(S_1/sqrt(d), ..., S_d/sqrt(d))``."""
    c = 1.0 / math.sqrt(tt.d)
    return tt.with_scale(tuple(s * c for s in tt.scale))


# ---------------------------------------------------------------------------
# Cauchy duals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CauchyDual:
    kind: str
    ops: tuple
    alpha: float
    identity_residual: float
    commutation: CommutationReport
    formula_residual: float = None

    @property
    def commutes(self):
        return self.commutation.commutes

    def as_dict(self):
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "identityResidual": self.identity_residual,
            "formulaResidual": self.formula_residual,
            "commutation": self.commutation.as_dict(),
            "safeWindow": [0.0, min(op.safe_size for op in self.ops) * self.ops[0].grid.h],
        }


def _op_commutation(ops, tol):
    pairs = []
    for i, j in itertools.permutations(range(len(ops)), 2):
        ab = compose(ops[i], ops[j])
        ba = compose(ops[j], ops[i])
        window = min(ab.safe_size, ba.safe_size)
        vals = [float(np.max(np.abs(t.multiplier[:window]))) for t in ab.terms + ba.terms if window]
        scale = max([1.0] + vals)
        res = ab.max_abs_difference(ba, window) / scale
        pairs.append(PairCommutation(i, j, res, res, res <= tol))
    return CommutationReport(tuple(pairs), tol)


def left_invertibility_margin(tt):
    """Smallest value of each ``Q_i(I) = phi_i(x+t_i)/phi_i(x)`` on its exact window."""
    return tuple(float(np.min(r)) for r in _gram_ratios(tt))


def toral_cauchy_dual(tt, alpha=DEFAULT_ALPHA, tol=DEFAULT_COMMUTE_TOL):
    """``S_i' = S_i (S_i^* S_i)^{-1}``: single terms with multiplier ``1/phi_{i,t_i}``."""
    margins = left_invertibility_margin(tt)
    if min(margins) < alpha:
        raise NotLeftInvertible(f"min Q_i(I) = {min(margins):.3g} below alpha = {alpha}")
    duals = []
    residual = 0.0
    for op in tt.ops:
        (term,) = op.terms
        m = term.multiplier
        inv = np.zeros_like(m, dtype=m.dtype)
        nz = m != 0
        inv[nz] = 1.0 / np.conj(m[nz])
        dual = OperatorExpr(tt.grid, [ShiftTerm(term.shift, inv, term.reach)])
        duals.append(dual)
        check = compose(adjoint(dual), op)
        residual = max(residual, check.max_abs_difference(OperatorExpr.identity(tt.grid), check.safe_size))
    return CauchyDual("toral", tuple(duals), min(margins), residual, _op_commutation(duals, tol))


def spherical_dual_formula_d2(tt):
    """Closed-form pair multipliers ``w1(x) / (w1(x)^2 + w2(x - t1 + t2)^2)`` and its mirror.

    Entries whose arguments leave the grid are returned as NaN.
    """
    if tt.d != 2:
        raise ValueError("closed form is for pairs")
    n = tt.grid.n
    w = [op.multiplier(k) for op, k in zip(tt.ops, tt.steps)]
    out = []
    for i, j in ((0, 1), (1, 0)):
        ki, kj = tt.steps[i], tt.steps[j]
        vals = np.full(n, np.nan)
        for x in range(ki, n):
            y = x - ki + kj
            if 0 <= y < n:
                vals[x] = w[i][x] / (w[i][x] ** 2 + w[j][y] ** 2)
        vals[:ki] = 0.0
        out.append(vals)
    return out


def spherical_cauchy_dual(tt, alpha=DEFAULT_ALPHA, tol=DEFAULT_COMMUTE_TOL):
    """``S_i^s = S_i Q_s(I)^{-1}`` with ``Q_s(I) = sum_i S_i^* S_i``."""
    grid = tt.grid
    q = OperatorExpr.zero(grid)
    for op, adj in zip(tt.ops, tt.adjoints):
        q = q + compose(adj, op)
    window = q.safe_size
    qv = np.asarray(q.multiplier(0), dtype=float)
    margin = float(np.min(qv[:window]))
    if margin < alpha:
        raise NotJointlyLeftInvertible(f"min Q_s(I) = {margin:.3g} below alpha = {alpha}")
    inv = np.zeros(grid.n)
    inv[:window] = 1.0 / qv[:window]
    q_inv = OperatorExpr.multiplication(grid, inv, reach=q.reach)
    duals = tuple(compose(op, q_inv) for op in tt.ops)

    total = OperatorExpr.zero(grid)
    for adj, dual in zip(tt.adjoints, duals):
        total = total + compose(adj, dual)
    residual = total.max_abs_difference(OperatorExpr.identity(grid), total.safe_size)

    formula_res = None
    if tt.d == 2:
        formula_res = 0.0
        for dual, ref, k in zip(duals, spherical_dual_formula_d2(tt), tt.steps):
            m = dual.multiplier(k)[: dual.safe_size]
            r = ref[: dual.safe_size]
            ok = ~np.isnan(r)
            if np.any(ok):
                formula_res = max(formula_res, float(np.max(np.abs(m[ok] - r[ok]))))
    return CauchyDual("spherical", duals, margin, residual, _op_commutation(duals, tol), formula_res)


# ---------------------------------------------------------------------------
# structure of the joint kernel
# ---------------------------------------------------------------------------

def unit_basis(grid, j):
    e = np.zeros(grid.n)
    e[j] = 1.0 / math.sqrt(grid.h)
    return e


@dataclass(frozen=True)
class JointKernel:
    t_min: float
    k_min: int
    primal_residual: float
    dual_residual: float

    @property
    def dimension(self):
        return self.k_min

    @property
    def basis_indices(self):
        return tuple(range(self.k_min))

    def basis(self, grid):
        return [unit_basis(grid, j) for j in self.basis_indices]

    def projection(self, f):
        """Orthogonal projection onto ``E``: restriction to ``[0, t_min)``."""
        out = np.zeros_like(f)
        out[: self.k_min] = f[: self.k_min]
        return out

    def as_dict(self):
        return {"tMin": self.t_min, "dimension": self.dimension,
                "primalResidual": self.primal_residual, "dualResidual": self.dual_residual}


def joint_kernel(tt):
    """``E = chi_[0, t_min) L^2``; checks that every ``S_i^*`` (and ``S_i'^*``) kills it."""
    grid = tt.grid
    basis = [unit_basis(grid, j) for j in range(tt.k_min)]
    primal = max(norm(apply(adj, e), grid) for adj in tt.adjoints for e in basis)
    try:
        duals = toral_cauchy_dual(tt).ops
        dual = max(norm(apply(adjoint(op), e), grid) for op in duals for e in basis)
    except NotLeftInvertible:
        dual = math.nan
    return JointKernel(tt.t_min, tt.k_min, primal, dual)


def _family(tt, which):
    if which == "primal":
        return tt.ops
    if which == "dual":
        return toral_cauchy_dual(tt).ops
    raise ValueError("which must be 'primal' or 'dual'")


@dataclass(frozen=True)
class GramReport:
    which: str
    radius: int
    n_vectors: int
    max_cross_block: float
    worst_pair: tuple
    k0_residual: float
    support_ok: bool
    tol: float

    @property
    def passed(self):
        return self.support_ok and self.max_cross_block <= self.tol and self.k0_residual <= self.tol

    def as_dict(self):
        return {"which": self.which, "radius": self.radius, "vectors": self.n_vectors,
                "maxCrossBlock": self.max_cross_block,
                "worstPair": [list(p) for p in self.worst_pair] if self.worst_pair else None,
                "k0Residual": self.k0_residual, "supportOk": self.support_ok,
                "tol": self.tol, "passed": self.passed}


def check_orthogonality(tt, radius, which="primal", tol=1e-10):
    """Gram matrix of ``{S^k e}`` over ``|k|_inf <= radius`` and the basis of ``E``.

    Cross-block entries are reported as cosines ``|G_ab| / sqrt(G_aa G_bb)``.
    """
    tt.require_commuting()
    grid = tt.grid
    ops = _family(tt, which)
    lattice = box(tt.d, radius)
    if max(tt.shift_of(k) for k in lattice) + tt.k_min > grid.n:
        raise WindowTooSmall(f"lattice radius {radius} pushes images past the grid")
    vectors, labels = [], []
    support_ok = True
    powers = PowerCache(ops)
    for k in lattice:
        power = powers(k)
        s = tt.shift_of(k)
        for j in range(tt.k_min):
            v = apply(power, unit_basis(grid, j))
            # image of E under S^k sits in [k.t, k.t + t_min)
            outside = np.ones(grid.n, bool)
            outside[s: s + tt.k_min] = False
            support_ok &= not np.any(v[outside])
            vectors.append(v)
            labels.append(k)
    V = np.array(vectors)
    G = grid.h * (V.conj() @ V.T)
    diag = np.sqrt(np.abs(np.diag(G)))
    cos = np.abs(G) / np.outer(diag, diag)
    worst, worst_pair = 0.0, None
    for a, b in itertools.combinations(range(len(labels)), 2):
        if labels[a] != labels[b] and cos[a, b] > worst:
            worst, worst_pair = float(cos[a, b]), (labels[a], labels[b])
    zero = [a for a, lab in enumerate(labels) if not any(lab)]
    k0 = float(np.max(np.abs(G[np.ix_(zero, zero)] - np.eye(len(zero)))))
    return GramReport(which, radius, len(labels), worst, worst_pair or (), k0, bool(support_ok), tol)


@dataclass(frozen=True)
class AnalyticReport:
    radius: int
    support_bound_exact: bool
    intersection_dimension: int
    exhausting_index: tuple

    @property
    def passed(self):
        return self.support_bound_exact and self.intersection_dimension == 0

    def as_dict(self):
        return {"radius": self.radius, "supportBoundExact": self.support_bound_exact,
                "intersectionDimension": self.intersection_dimension,
                "exhaustingIndex": list(self.exhausting_index), "passed": self.passed}


def check_analytic(tt, radius):
    """Every column of ``S^k`` vanishes exactly below ``sum k_i t_i``.

    The truncated intersection of the ranges is ``chi_[max k.t, X) L^2``, which is
    ``{0}`` once some ``k`` in the box pushes past the grid.
    """
    grid = tt.grid
    exact = True
    start = 0
    powers = PowerCache(tt.ops)
    for k in box(tt.d, radius):
        s = tt.shift_of(k)
        start = max(start, s)
        mat = to_dense(powers(k))
        exact &= not np.any(mat[: min(s, grid.n), :])
    # rank of the deepest range that stays representable
    dim = max(grid.n - start, 0)
    exhaust = ()
    for k in box(tt.d, radius):
        if tt.shift_of(k) >= grid.n:
            exhaust = k
            mat = to_dense(powers(k))
            dim = int(np.linalg.matrix_rank(mat)) if np.any(mat) else 0
            break
    return AnalyticReport(radius, bool(exact), dim, exhaust)


@dataclass(frozen=True)
class WanderingReport:
    which: str
    n_vectors: int
    span_dimension: int
    union_points: int
    projection_residual: float
    tol: float

    @property
    def passed(self):
        return self.span_dimension == self.union_points and self.projection_residual <= self.tol

    def as_dict(self):
        return {"which": self.which, "vectors": self.n_vectors, "spanDimension": self.span_dimension,
                "unionPoints": self.union_points, "projectionResidual": self.projection_residual,
                "tol": self.tol, "passed": self.passed}


def check_wandering(tt, which="primal", tol=1e-8):
    """Span of ``{S^k e}`` over every ``k`` whose image starts on the grid."""
    tt.require_commuting()
    grid = tt.grid
    ops = _family(tt, which)
    bounds = tuple((grid.n - 1) // k for k in tt.steps)
    columns = []
    union = np.zeros(grid.n, bool)
    powers = PowerCache(ops)
    for k in multi_indices(bounds):
        s = tt.shift_of(k)
        if s >= grid.n:
            continue
        power = powers(k)
        for j in range(tt.k_min):
            v = apply(power, unit_basis(grid, j))
            nv = np.linalg.norm(v)
            if nv > 0:  # images past the grid end are dropped
                columns.append(v / nv)
        union[s: s + tt.k_min] = True
    # unit columns, so exponential weights do not fall under the rank cutoff
    A = np.array(columns).T
    u, sv, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(sv > sv[0] * max(A.shape) * np.finfo(float).eps))
    Q = u[:, :rank]
    residual = 0.0
    for j in np.flatnonzero(union):
        e = np.zeros(grid.n)
        e[j] = 1.0
        residual = max(residual, float(np.linalg.norm(e - Q @ (Q.conj().T @ e))))
    return WanderingReport(which, A.shape[1], rank, int(union.sum()), residual, tol)


@dataclass(frozen=True)
class KernelConditionReport:
    alpha_max: tuple
    entries: tuple  # (j, alpha, residual)
    tol: float

    @property
    def holds(self):
        return all(r <= self.tol for _, _, r in self.entries)

    @property
    def max_residual(self):
        return max((r for _, _, r in self.entries), default=0.0)

    def failures(self):
        return [(j, a, r) for j, a, r in self.entries if r > self.tol]

    def as_dict(self):
        fails = self.failures()
        return {"alphaMax": list(self.alpha_max), "holds": self.holds, "tol": self.tol,
                "maxResidual": self.max_residual, "checked": len(self.entries),
                "failures": [{"j": j, "alpha": list(a), "residual": r} for j, a, r in fails[:20]]}


def kernel_condition_residuals(ops, duals, k_min, alpha_max, tol=1e-12):
    """``|| S_j^* S'^alpha_[j] e ||`` over ``E``'s unit basis, ``alpha <= alpha_max`` with ``alpha_j = 0``."""
    grid = ops[0].grid
    d = len(ops)
    basis = [unit_basis(grid, j) for j in range(k_min)]
    entries = []
    powers = PowerCache(duals)
    for j in range(d):
        adj = adjoint(ops[j])
        bounds = tuple(0 if i == j else alpha_max[i] for i in range(d))
        for alpha in multi_indices(bounds):
            if sum(a * op.shifts[0] for a, op in zip(alpha, duals)) + k_min > grid.n:
                raise TruncationExceedsGrid(f"alpha={alpha} pushes E past the grid")
            power = powers(alpha)
            res = 0.0
            for e in basis:
                res = max(res, norm(apply(adj, apply(power, e)), grid))
            entries.append((j, alpha, res))
    return KernelConditionReport(tuple(alpha_max), tuple(entries), tol)


def check_kernel_condition(tt, alpha_max, tol=1e-12):
    """Whether ``E`` lies in ``ker S_j^* prod_{i != j} S_i'^{alpha_i}`` for all tested ``alpha``."""
    tt.require_commuting()
    if isinstance(alpha_max, int):
        alpha_max = (alpha_max,) * tt.d
    duals = toral_cauchy_dual(tt).ops
    return kernel_condition_residuals(tt.ops, duals, tt.k_min, tuple(alpha_max), tol)


@dataclass(frozen=True)
class HyponormalReport:
    p: int
    min_eigenvalue: float
    scale: float
    window: int
    tol: float

    @property
    def psd(self):
        return self.min_eigenvalue >= -self.tol * self.scale

    def as_dict(self):
        return {"p": self.p, "minEigenvalue": self.min_eigenvalue, "scale": self.scale,
                "window": self.window, "tol": self.tol, "psd": self.psd}


def check_hyponormal_powers(S, p, grid_limit=1024, tol=1e-9):
    """Smallest eigenvalue of the block matrix ``([H_j^*, H_i])`` with ``H_i = S^{i-1}``.

    Blocks are compressed to the rows/columns where every commutator is exact,
    which is a valid necessary test for positivity. Evidence at truncation only.
    """
    grid = S.grid
    if grid.n > grid_limit:
        raise TooLarge(f"grid of {grid.n} points exceeds grid_limit={grid_limit}")
    powers = [S.power(i) for i in range(p)]
    blocks = {}
    reach = 0
    for i in range(p):
        for j in range(p):
            hj_adj = adjoint(powers[j])
            c = compose(hj_adj, powers[i]) - compose(powers[i], hj_adj)
            blocks[i, j] = c
            reach = max(reach, compose(hj_adj, powers[i]).reach, compose(powers[i], hj_adj).reach)
    w = grid.n - reach
    if w <= 0:
        raise TooLarge("grid too short for the requested power")
    M = np.zeros((p * w, p * w), dtype=complex)
    for (i, j), c in blocks.items():
        M[i * w:(i + 1) * w, j * w:(j + 1) * w] = to_dense(c)[:w, :w]
    M = 0.5 * (M + M.conj().T)
    eig = np.linalg.eigvalsh(M)
    scale = max(float(abs(np.trace(M).real)), float(np.max(np.abs(M))) if M.size else 0.0, np.finfo(float).tiny)
    return HyponormalReport(p, float(eig[0]), scale, w, tol)
