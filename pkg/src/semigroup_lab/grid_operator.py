"""Exact algebra of weighted translation operators on a truncated grid.

An operator is a finite sum of shift terms ``(k, m)`` acting as
``g[j] = m[j] * f[j - k]`` (zero when ``j - k`` leaves the grid). Shifts are
integer grid steps, so composition, adjoints and the quadrature pairing are all
exact; the only approximation is truncation at the right end of the grid.

Each term also records its *reach*: how far past the output index the action
ever reads. Rows ``j < n - reach`` of the term agree with the operator on the
whole half-line; the rest may have lost mass to truncation. ``safe_size`` is the
number of leading grid points where every term is exact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NotSingleTerm, TooLarge

DENSE_LIMIT = 4096


def _shifted(values, k, n):
    """``out[j] = values[j - k]`` with zeros where ``j - k`` is off-grid."""
    out = np.zeros(n, dtype=values.dtype)
    if k >= 0:
        if k < n:
            out[k:] = values[: n - k]
    else:
        if -k < n:
            out[: n + k] = values[-k:]
    return out


def _domain_mask(k, n):
    """Rows ``j`` for which ``j - k`` is a grid index."""
    j = np.arange(n)
    return (j - k >= 0) & (j - k < n)


@dataclass(frozen=True, eq=False)
class ShiftTerm:
    shift: int
    multiplier: np.ndarray
    reach: int = 0

    def __repr__(self):
        return f"ShiftTerm(shift={self.shift}, reach={self.reach}, |m|max={np.max(np.abs(self.multiplier)):.3g})"


def _as_multiplier(values, n):
    arr = np.asarray(values)
    if arr.shape != (n,):
        raise GridMismatch(f"multiplier has shape {arr.shape}, grid has {n} points")
    if np.iscomplexobj(arr):
        if not np.any(arr.imag):
            arr = arr.real
        return arr.astype(complex if np.iscomplexobj(arr) else float)
    return arr.astype(float)


class OperatorExpr:
    """Canonical finite sum of shift terms on one grid.

    Terms are kept sorted by shift with equal shifts merged, multipliers zeroed
    outside each term's domain, and identically-zero terms dropped.

    Supports ``a @ b`` (composition), ``a + b``, ``a - b``, scalar ``c * a`` and
    ``a.H`` (adjoint).
    """

    __slots__ = ("grid", "terms")

    def __init__(self, grid, terms=()):
        merged = {}
        n = grid.n
        for term in terms:
            m = _as_multiplier(term.multiplier, n)
            m = np.where(_domain_mask(term.shift, n), m, 0)
            if term.shift in merged:
                old_m, old_reach = merged[term.shift]
                merged[term.shift] = (old_m + m, max(old_reach, term.reach))
            else:
                merged[term.shift] = (m, term.reach)
        canon = []
        for k in sorted(merged):
            m, reach = merged[k]
            if not np.any(m):
                continue
            m = np.array(m)
            m.setflags(write=False)
            canon.append(ShiftTerm(int(k), m, int(max(reach, 0))))
        self.grid = grid
        self.terms = tuple(canon)

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, grid):
        return cls(grid, [ShiftTerm(0, np.ones(grid.n))])

    @classmethod
    def zero(cls, grid):
        return cls(grid, [])

    @classmethod
    def multiplication(cls, grid, values, reach=0):
        return cls(grid, [ShiftTerm(0, values, reach)])

    # -- introspection ----------------------------------------------------
    @property
    def shifts(self):
        return tuple(t.shift for t in self.terms)

    @property
    def reach(self):
        return max((t.reach for t in self.terms), default=0)

    @property
    def safe_size(self):
        """Number of leading grid points on which the truncated action is exact."""
        return max(self.grid.n - self.reach, 0)

    def term(self, shift):
        for t in self.terms:
            if t.shift == shift:
                return t
        return None

    def multiplier(self, shift=0):
        """Multiplier of the term with this shift (zeros if absent)."""
        t = self.term(shift)
        return np.zeros(self.grid.n) if t is None else t.multiplier

    @property
    def is_multiplication(self):
        return all(t.shift == 0 for t in self.terms)

    def equals(self, other):
        """Exact equality of canonical forms."""
        if self.grid != other.grid or self.shifts != other.shifts:
            return False
        return all(np.array_equal(a.multiplier, b.multiplier) for a, b in zip(self.terms, other.terms))

    def max_abs_difference(self, other, window=None):
        """Largest entrywise gap between the two operators on the first ``window`` rows."""
        diff = self - other
        if window is None:
            window = self.grid.n
        worst = 0.0
        for t in diff.terms:
            if window > 0:
                worst = max(worst, float(np.max(np.abs(t.multiplier[:window]))))
        return worst

    def __repr__(self):
        return f"OperatorExpr(n={self.grid.n}, shifts={self.shifts}, reach={self.reach})"

    # -- algebra ----------------------------------------------------------
    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        _check_same_grid(self, other)
        return OperatorExpr(self.grid, self.terms + other.terms)

    def __neg__(self):
        return OperatorExpr(self.grid, [ShiftTerm(t.shift, -t.multiplier, t.reach) for t in self.terms])

    def __sub__(self, other):
        if not isinstance(other, OperatorExpr):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, OperatorExpr):
            return NotImplemented
        return OperatorExpr(self.grid, [ShiftTerm(t.shift, scalar * t.multiplier, t.reach) for t in self.terms])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    @property
    def H(self):
        return adjoint(self)

    def __call__(self, f):
        return apply(self, f)

    def power(self, p):
        """``p``-fold composition (``p = 0`` gives the identity), by repeated squaring."""
        if p < 0:
            raise ValueError("power must be >= 0")
        out = OperatorExpr.identity(self.grid)
        base = self
        while p:
            if p & 1:
                out = compose(base, out)
            p >>= 1
            if p:
                base = compose(base, base)
        return out


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatch(f"operators live on different grids: {a.grid} vs {b.grid}")


def make_weighted_translation(symbol, t, grid, scale=1.0):
    """Single-term operator ``f(x) -> sqrt(phi(x)/phi(x-t)) f(x-t)`` (zero for ``x < t``)."""
    k = grid.steps(t)
    phi = symbol.on_grid(grid)
    m = np.zeros(grid.n)
    m[k:] = np.sqrt(phi[k:] / phi[:-k])
    return OperatorExpr(grid, [ShiftTerm(k, scale * m)])


def adjoint(op):
    """Term ``(k, m)`` becomes ``(-k, conj(m(x + kh)))``; reach grows by ``k``."""
    n = op.grid.n
    terms = []
    for t in op.terms:
        m = _shifted(np.conj(t.multiplier), -t.shift, n)
        terms.append(ShiftTerm(-t.shift, m, t.reach + t.shift))
    return OperatorExpr(op.grid, terms)


def compose(a, b):
    """``a ∘ b`` (apply ``b`` first): ``(ka, ma)(kb, mb) -> (ka + kb, ma(x) mb(x - ka h))``."""
    _check_same_grid(a, b)
    n = a.grid.n
    terms = []
    for ta in a.terms:
        for tb in b.terms:
            m = ta.multiplier * _shifted(tb.multiplier, ta.shift, n)
            reach = max(ta.reach, tb.reach - ta.shift)
            terms.append(ShiftTerm(ta.shift + tb.shift, m, reach))
    return OperatorExpr(a.grid, terms)


def _check_function(f, grid):
    arr = np.asarray(f)
    if arr.shape != (grid.n,):
        raise GridMismatch(f"grid function has shape {arr.shape}, grid has {grid.n} points")
    return arr


def apply(op, f):
    f = _check_function(f, op.grid)
    n = op.grid.n
    dtype = np.result_type(f.dtype, *(t.multiplier.dtype for t in op.terms)) if op.terms else f.dtype
    out = np.zeros(n, dtype=dtype)
    for t in op.terms:
        out += t.multiplier * _shifted(f, t.shift, n)
    return out


def inner_product(f, g, grid):
    """Quadrature pairing ``h * sum f conj(g)``."""
    f = _check_function(f, grid)
    g = _check_function(g, grid)
    return grid.h * np.vdot(g, f)


def norm(f, grid):
    return float(np.sqrt(abs(inner_product(f, f, grid))))


def sup_multiplier_norm(op):
    """Grid maximum of ``|m|`` over exact rows; the operator norm of a single shift term.

    This samples the essential supremum only at grid points.
    """
    if len(op.terms) != 1:
        raise NotSingleTerm(f"expected one shift term, got {len(op.terms)}")
    m = op.terms[0].multiplier[: op.safe_size]
    return float(np.max(np.abs(m))) if m.size else 0.0


def to_dense(op, grid=None):
    """Dense ``n x n`` matrix with entry ``(j, j - k) = m[j]`` for every term."""
    grid = op.grid if grid is None else grid
    _check_same_grid(op, OperatorExpr(grid))
    n = grid.n
    if n > DENSE_LIMIT:
        raise TooLarge(f"dense oracle limited to n <= {DENSE_LIMIT}, got {n}")
    dtype = complex if any(np.iscomplexobj(t.multiplier) for t in op.terms) else float
    mat = np.zeros((n, n), dtype=dtype)
    rows = np.arange(n)
    for t in op.terms:
        cols = rows - t.shift
        ok = (cols >= 0) & (cols < n)
        mat[rows[ok], cols[ok]] += t.multiplier[ok]
    return mat
