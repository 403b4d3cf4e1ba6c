"""Spectral radii, polydisc bounds for the Taylor spectrum, and spectral evidence checks."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotLeftInvertible, NotSingleTerm, TooLarge, TruncationExceedsGrid
from .grid_operator import DENSE_LIMIT, OperatorExpr, adjoint, apply, compose, to_dense
from .tuples import toral_cauchy_dual

# rows before the end of the exact window that count as touching it
_EDGE_SLACK = 1


def _single_term(S):
    if len(S.terms) != 1 or S.terms[0].shift <= 0:
        raise NotSingleTerm("expected a single forward translation term")
    return S.terms[0]


@dataclass(frozen=True)
class PowerNorm:
    k: int
    value: float
    argmax: int
    window: int

    @property
    def at_edge(self):
        """The sup sits at the last exact row, so truncation may be hiding a larger value."""
        return self.window > 0 and self.argmax >= self.window - _EDGE_SLACK


def _power_norm(S, k):
    term = _single_term(S)
    if k * term.shift >= S.grid.n:
        raise TruncationExceedsGrid(f"S^{k} translates past the grid (n={S.grid.n})")
    P = S.power(k)
    window = P.safe_size
    m = np.abs(P.multiplier(k * term.shift)[:window])
    j = int(np.argmax(m))
    return PowerNorm(k, float(m[j]), j, window)


def power_norm(S, k):
    """``||S^k||`` as the sup of the composed multiplier over the exact window."""
    return _power_norm(S, k).value


def power_norm_table(S, kmax):
    return [_power_norm(S, k) for k in range(1, kmax + 1)]


@dataclass(frozen=True)
class SpectralRadius:
    """Ratio and root estimates of ``lim ||S^k||^{1/k}`` with the value actually used.

    ``root`` is the smallest ``||S^k||^{1/k}`` seen, an upper bound on the
    spectral radius for every ``k``; it is used when no closed form is known.
    """

    value: float
    ratio: float
    root: float
    gap: float
    closed_form: float
    kmax: int
    norms: tuple
    edge_hits: tuple

    @property
    def source(self):
        return "closed-form" if self.closed_form is not None else "root"

    def as_dict(self):
        return {"value": self.value, "ratio": self.ratio, "root": self.root, "gap": self.gap,
                "closedForm": self.closed_form, "source": self.source, "kmax": self.kmax,
                "edgeHits": list(self.edge_hits)}


def spectral_radius(S, kmax=32, closed_form=None):
    if kmax < 4:
        raise ValueError("kmax must be >= 4")
    table = power_norm_table(S, kmax)
    norms = [p.value for p in table]
    ratio = norms[-1] / norms[-2] if norms[-2] > 0 else 0.0
    roots = [v ** (1.0 / p.k) for v, p in zip(norms, table)]
    root = min(roots)
    value = closed_form if closed_form is not None else root
    return SpectralRadius(value=float(value), ratio=float(ratio), root=float(root),
                          gap=float(abs(ratio - roots[-1])), closed_form=closed_form, kmax=kmax,
                          norms=tuple(norms), edge_hits=tuple(p.k for p in table if p.at_edge))


def radius_closed_form(symbol, t, scale=1.0, dual=False):
    """Exact spectral radius of ``scale * S_t`` (or its Cauchy dual) for catalog symbols.

    ``sup_x phi(x+kt)/phi(x)`` grows exponentially only for ``exp``; every other
    catalog kind has bounded or polynomial ratios, so the ``k``-th root tends to 1.
    Returns ``None`` for tabulated symbols.
    """
    if not symbol.is_catalog:
        return None
    base = math.exp(symbol.params["beta"] * t / 2) if symbol.kind == "exp" else 1.0
    value = base * scale
    return 1.0 / value if dual else value


@dataclass(frozen=True)
class SpectralBounds:
    """``D_r^d ⊆ σ(S) ⊆ D_R^d`` with per-axis diagnostics; ``inner`` is ``None`` without a dual."""

    inner: np.ndarray
    outer: np.ndarray
    primal: tuple
    dual: tuple
    polydisc_equality: bool
    consistent: bool
    note: str

    def as_dict(self):
        return {
            "inner": None if self.inner is None else self.inner.tolist(),
            "outer": self.outer.tolist(),
            "primal": [r.as_dict() for r in self.primal],
            "dual": None if self.dual is None else [r.as_dict() for r in self.dual],
            "polydiscEquality": self.polydisc_equality,
            "consistent": self.consistent,
            "note": self.note,
        }


def polydisc_bounds(tt, kmax=32, tol=1e-6):
    """Inner radii ``1/r(S_i')`` and outer radii ``r(S_i)``.

    ``kmax`` is clipped per axis so that ``S_i^k`` stays inside the grid.
    """
    n = tt.grid.n
    primal, dual = [], []
    try:
        duals = toral_cauchy_dual(tt).ops
    except NotLeftInvertible:
        duals = None
    for i in range(tt.d):
        kk = min(kmax, (n - 1) // tt.steps[i])
        cf = radius_closed_form(tt.symbols[i], tt.t[i], tt.scale[i])
        primal.append(spectral_radius(tt.ops[i], kk, cf))
        if duals is not None:
            cf = radius_closed_form(tt.symbols[i], tt.t[i], tt.scale[i], dual=True)
            dual.append(spectral_radius(duals[i], kk, cf))
    outer = np.array([r.value for r in primal])
    inner = None if duals is None else np.array([1.0 / r.value for r in dual])
    equal = inner is not None and bool(np.all(np.abs(inner - 1) <= 1e-12) and np.all(np.abs(outer - 1) <= 1e-12))
    consistent = inner is None or bool(np.all(inner <= outer + tol))
    if equal:
        note = "toral isometry: the Taylor spectrum is the closed unit polydisc"
    elif inner is None:
        note = "not toral left-invertible: outer polydisc only"
    else:
        note = "annular sandwich between inner and outer polydiscs"
    return SpectralBounds(inner, outer, tuple(primal), None if duals is None else tuple(dual),
                          equal, consistent, note)


@dataclass(frozen=True)
class EigenfunctionWitness:
    lam: complex
    f: np.ndarray
    residual: float
    window: int
    block_norms: np.ndarray
    ratio: float

    @property
    def converges(self):
        return self.ratio < 1

    def as_dict(self):
        return {"lambda": [self.lam.real, self.lam.imag], "residual": self.residual, "window": self.window,
                "ratio": self.ratio, "converges": self.converges,
                "partialNorms": np.sqrt(np.cumsum(self.block_norms)).tolist()}


def adjoint_eigenfunction(S, lam, seed):
    """Solve ``S* f = lam f`` by propagating ``seed`` (values on ``[0, t)``) one block at a time.

    ``ratio`` is the largest block-to-block ratio of squared norms over the second
    half of the grid; below 1 the truncated norms converge geometrically.
    """
    term = _single_term(S)
    k, m = term.shift, term.multiplier
    n = S.grid.n
    seed = np.asarray(seed, dtype=complex)
    if seed.shape != (k,):
        raise ValueError(f"seed must have {k} values (one translation block)")
    lam = complex(lam)
    f = np.zeros(n, dtype=complex)
    f[:k] = seed
    for j in range(k, n):
        f[j] = lam * f[j - k] / np.conj(m[j])
    St = adjoint(S)
    window = St.safe_size
    res = apply(St, f)[:window] - lam * f[:window]
    scale = max(1.0, float(np.max(np.abs(f[:window])))) if window else 1.0
    nb = n // k
    blocks = S.grid.h * np.sum(np.abs(f[: nb * k].reshape(nb, k)) ** 2, axis=1)
    half = blocks[nb // 2:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(half[:-1] > 0, half[1:] / half[:-1], 0.0)
    ratio = float(np.max(ratios)) if ratios.size else 0.0
    return EigenfunctionWitness(lam, f, float(np.max(np.abs(res))) / scale if window else 0.0,
                                window, blocks, ratio)


@dataclass(frozen=True)
class PointSpectrumVerdict:
    lambdas: tuple
    free: tuple  # undetermined grid values for each lambda
    window: int

    @property
    def only_zero(self):
        """Every solution of ``S f = lam f`` vanishes on the first ``window`` points."""
        return all(all(j >= self.window for j in fr) for fr in self.free)

    def as_dict(self):
        return {"lambdas": [[complex(v).real, complex(v).imag] for v in self.lambdas],
                "freeCounts": [len(fr) for fr in self.free], "window": self.window,
                "onlyZeroSolution": self.only_zero}


def check_no_point_spectrum(S, lams):
    """Forward substitution on ``S f = lam f`` (row ``j``: ``m[j] f[j-k] = lam f[j]``).

    For ``lam != 0`` rows ``j < k`` force ``f[j] = 0`` and each later row
    determines ``f[j]`` from ``f[j-k]``, so only zero survives. For ``lam = 0``
    positivity of ``m`` forces ``f[j-k] = 0``; the last ``k`` values are never
    constrained on a truncated grid, so the verdict covers ``[0, n-k)``.
    """
    term = _single_term(S)
    k, m = term.shift, term.multiplier
    n = S.grid.n
    free_all = []
    for lam in lams:
        lam = complex(lam)
        forced = np.zeros(n, dtype=bool)
        if lam != 0:
            # each f[j] is a multiple of f[j mod k] for j < k, which is forced to zero
            forced[:] = True
        else:
            for j in range(k, n):
                if m[j] != 0:
                    forced[j - k] = True
        free_all.append(tuple(int(j) for j in np.flatnonzero(~forced)))
    return PointSpectrumVerdict(tuple(complex(v) for v in lams), tuple(free_all), n - k)


def min_singular_value(S, lam):
    """Smallest singular value of ``S - lam I`` on inputs whose image stays in the grid.

    Columns ``i`` with ``i + k >= n`` lose their translate to truncation, and the
    adjoint eigenfunction then shows up as a spurious near-kernel, so they are left out.
    """
    term = _single_term(S)
    A = to_dense(S).astype(complex) - lam * np.eye(S.grid.n)
    A = A[:, : S.grid.n - term.shift]
    return float(np.linalg.svd(A, compute_uv=False)[-1])


@dataclass(frozen=True)
class SymmetryReport:
    thetas: tuple
    residuals: tuple  # max over components, per theta
    tol: float

    @property
    def passed(self):
        return max(self.residuals, default=0.0) <= self.tol

    def as_dict(self):
        return {"thetas": list(self.thetas), "residuals": list(self.residuals), "tol": self.tol,
                "passed": self.passed}


def check_circular_symmetry(tt, thetas, tol=1e-12):
    """``max |M_θ* S_j M_θ - e^{-iθ t_j} S_j|`` with ``(M_θ f)(x) = e^{iθx} f(x)``."""
    if tt.grid.n > DENSE_LIMIT:
        raise TooLarge(f"dense check limited to n <= {DENSE_LIMIT}")
    x = tt.grid.x
    mats = [to_dense(op) for op in tt.ops]
    residuals = []
    for theta in thetas:
        ph = np.exp(1j * theta * x)
        worst = 0.0
        for S, t in zip(mats, tt.t):
            conj = np.conj(ph)[:, None] * S * ph[None, :]
            worst = max(worst, float(np.max(np.abs(conj - np.exp(-1j * theta * t) * S))))
        residuals.append(worst)
    return SymmetryReport(tuple(float(v) for v in thetas), tuple(residuals), tol)


@dataclass(frozen=True)
class DensityReport:
    levels: tuple  # (i, null dimension, expected, support residual)
    n: int

    @property
    def passed(self):
        return all(dim == exp and res <= 1e-10 for _, dim, exp, res in self.levels)

    @property
    def exhausted(self):
        """Some tested level already has the whole grid as kernel."""
        return any(dim == self.n for _, dim, _, _ in self.levels)

    def as_dict(self):
        return {"levels": [{"i": i, "dimension": dim, "expected": exp, "supportResidual": res}
                           for i, dim, exp, res in self.levels],
                "passed": self.passed, "exhausted": self.exhausted}


def check_kernel_density(tt, imax):
    """Null space of ``h -> (S_1*^i h, ..., S_d*^i h)`` against ``χ_[0, i t_min)``.

    ``imax`` is either the top level (all ``i <= imax`` are tested) or an explicit
    collection of levels.
    """
    n = tt.grid.n
    if n > DENSE_LIMIT:
        raise TooLarge(f"dense check limited to n <= {DENSE_LIMIT}")
    wanted = set(range(1, imax + 1)) if isinstance(imax, int) else {int(i) for i in imax}
    if not wanted or min(wanted) < 1:
        raise ValueError("levels must be positive")
    levels = []
    powers = [OperatorExpr.identity(tt.grid)] * tt.d
    for i in range(1, max(wanted) + 1):
        powers = [compose(adjoint(op), p) for op, p in zip(tt.ops, powers)]
        if i not in wanted:
            continue
        A = np.vstack([to_dense(p) for p in powers])
        _, s, vh = np.linalg.svd(A)
        cutoff = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > cutoff))
        null = vh[rank:].conj().T
        expected = min(i * tt.k_min, n)
        # null vectors must live on the first i*k_min points
        resid = float(np.max(np.abs(null[expected:]))) if null.size and expected < n else 0.0
        levels.append((i, n - rank, expected, resid))
    return DensityReport(tuple(levels), n)
