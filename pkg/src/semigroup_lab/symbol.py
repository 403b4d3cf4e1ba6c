"""Symbols of weighted translation semigroups and finite-difference class tests.

A symbol is a positive continuous function on the half-line. Catalog kinds have
closed forms and can be evaluated anywhere on ``[0, inf)``; tabulated symbols are
known only at the points of the analysis grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveSymbol, OutOfDomain, ValidationError, WindowTooSmall

KINDS = (
    "constant",
    "affine",
    "reciprocal-affine",
    "moebius",
    "log-shift",
    "exp",
    "two-minus-exp",
    "sqrt-affine",
    "tabulated",
)

# required parameters per kind, in config-file spelling
_PARAMS = {
    "constant": ("c",),
    "affine": ("a", "b"),
    "reciprocal-affine": (),
    "moebius": ("lambda",),
    "log-shift": (),
    "exp": ("beta",),
    "two-minus-exp": (),
    "sqrt-affine": (),
    "tabulated": ("samples", "h"),
}

DEFAULT_FLOOR = float(np.finfo(float).tiny)


@dataclass(frozen=True, eq=False)
class SymbolSpec:
    """A symbol ``phi`` identified by catalog kind and parameters.

    Build one with the class-method constructors or :meth:`from_dict`, e.g.
    ``SymbolSpec.moebius(0.5)`` or ``SymbolSpec.from_dict({"kind": "exp", "beta": -1})``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if self.kind not in _PARAMS:
            raise ValidationError(f"unknown symbol kind {self.kind!r}", field="kind", kind="UnknownKind")
        missing = [p for p in _PARAMS[self.kind] if p not in self.params]
        if missing:
            raise ValidationError(f"{self.kind} symbol needs {missing}", field="symbol")
        extra = set(self.params) - set(_PARAMS[self.kind])
        if extra:
            raise ValidationError(f"unexpected parameters {sorted(extra)} for {self.kind}", field="symbol")
        if not self.floor > 0:
            raise ValidationError("positivity floor must be > 0", field="floor")
        params = dict(self.params)
        if self.kind == "tabulated":
            samples = np.asarray(params["samples"], dtype=float)
            if samples.ndim != 1 or samples.size < 2:
                raise ValidationError("tabulated symbol needs a 1-d sample array", field="samples")
            if np.any(~np.isfinite(samples)) or np.any(samples <= self.floor):
                raise NonPositiveSymbol("tabulated symbol has a non-positive or non-finite sample")
            samples.setflags(write=False)
            params["samples"] = samples
            params["h"] = float(params["h"])
        else:
            for key in _PARAMS[self.kind]:
                params[key] = float(params[key])
            if self.kind == "moebius" and not params["lambda"] > 0:
                raise ValidationError("moebius needs lambda > 0", field="lambda")
            if self.kind == "constant" and not params["c"] > 0:
                raise NonPositiveSymbol("constant symbol must be positive")
        object.__setattr__(self, "params", params)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c):
        return cls("constant", {"c": c})

    @classmethod
    def affine(cls, a, b):
        return cls("affine", {"a": a, "b": b})

    @classmethod
    def reciprocal_affine(cls):
        return cls("reciprocal-affine")

    @classmethod
    def moebius(cls, lam):
        return cls("moebius", {"lambda": lam})

    @classmethod
    def log_shift(cls):
        return cls("log-shift")

    @classmethod
    def exp(cls, beta):
        return cls("exp", {"beta": beta})

    @classmethod
    def two_minus_exp(cls):
        return cls("two-minus-exp")

    @classmethod
    def sqrt_affine(cls):
        return cls("sqrt-affine")

    @classmethod
    def tabulated(cls, samples, h):
        return cls("tabulated", {"samples": samples, "h": h})

    @classmethod
    def from_dict(cls, record):
        if not isinstance(record, dict) or "kind" not in record:
            raise ValidationError("symbol record needs a 'kind' field", field="symbol")
        record = dict(record)
        kind = record.pop("kind")
        floor = record.pop("floor", DEFAULT_FLOOR)
        return cls(kind, record, floor)

    def to_dict(self):
        out = {"kind": self.kind}
        for key, value in self.params.items():
            out[key] = value.tolist() if isinstance(value, np.ndarray) else value
        if self.floor != DEFAULT_FLOOR:
            out["floor"] = self.floor
        return out

    def __eq__(self, other):
        if not isinstance(other, SymbolSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    def __repr__(self):
        if self.kind == "tabulated":
            return f"SymbolSpec(tabulated, {self.params['samples'].size} samples)"
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"SymbolSpec({self.kind}{', ' if args else ''}{args})"

    @property
    def is_catalog(self):
        return self.kind != "tabulated"

    # -- evaluation -------------------------------------------------------
    def _raw(self, x):
        p = self.params
        kind = self.kind
        if kind == "constant":
            return np.full_like(x, p["c"])
        if kind == "affine":
            return p["a"] * x + p["b"]
        if kind == "reciprocal-affine":
            return 1.0 / (x + 1.0)
        if kind == "moebius":
            return (x + p["lambda"]) / (x + 1.0)
        if kind == "log-shift":
            return np.log(x + 2.0)
        if kind == "exp":
            return np.exp(p["beta"] * x)
        if kind == "two-minus-exp":
            return 2.0 - np.exp(-x)
        if kind == "sqrt-affine":
            return np.sqrt(x + 1.0)
        # tabulated: exact grid lookup only
        samples, h = p["samples"], p["h"]
        ratio = x / h
        idx = np.rint(ratio)
        off = np.abs(ratio - idx) > 1e-9 * np.maximum(1.0, np.abs(ratio))
        if np.any(off) or np.any(idx < 0) or np.any(idx >= samples.size):
            raise OutOfDomain("tabulated symbol evaluated off its sample grid")
        return samples[idx.astype(int)]

    def __call__(self, x):
        return eval_symbol(self, x)

    def on_grid(self, grid):
        """Values at every grid point; tabulated symbols must match the grid exactly."""
        if self.kind == "tabulated":
            samples = self.params["samples"]
            if abs(self.params["h"] - grid.h) > 1e-12 * grid.h or samples.size != grid.n:
                raise ValidationError(
                    f"tabulated symbol has {samples.size} samples at h={self.params['h']}, "
                    f"grid has {grid.n} at h={grid.h}",
                    field="samples",
                )
            return np.array(samples)
        return eval_symbol(self, grid.x)


def eval_symbol(spec, x):
    """``phi(x)`` for scalar or array ``x >= 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise OutOfDomain("symbols live on the half-line x >= 0")
    with np.errstate(over="ignore"):
        values = np.asarray(spec._raw(arr), dtype=float)
    bad = ~(values > spec.floor) | ~np.isfinite(values)
    if np.any(bad):
        where = arr[bad] if arr.ndim else arr
        raise NonPositiveSymbol(f"{spec!r} is not positive and finite at x={np.ravel(where)[:3]}")
    return values if arr.ndim else float(values)


@dataclass(frozen=True)
class DifferenceProfile:
    """Iterated forward differences ``D_s^n phi`` on grid points.

    ``table[n]`` holds ``D_s^n phi(x_j)`` for ``j = 0 .. len(table[n]) - 1``;
    every order is valid on the first ``admissible`` points.
    """

    step: float
    step_points: int
    max_order: int
    table: tuple
    admissible: int

    def order(self, n, window=True):
        values = self.table[n]
        return values[: self.admissible] if window else values


def difference_profile(spec, step, max_order, grid):
    """Exact iterated forward differences of ``spec`` sampled on ``grid``.

    Only grid samples are used, so ``step`` must be a multiple of ``grid.h`` and
    the grid must leave room for ``max_order`` steps.
    """
    k = grid.steps(step)
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    admissible = grid.n - max_order * k
    if admissible < 1:
        raise WindowTooSmall(
            f"{max_order} steps of {step} need more than the {grid.n} grid points available"
        )
    current = spec.on_grid(grid)
    table = [current]
    for _ in range(max_order):
        current = current[k:] - current[:-k]
        table.append(current)
    for arr in table:
        arr.setflags(write=False)
    return DifferenceProfile(step=k * grid.h, step_points=k, max_order=max_order,
                             table=tuple(table), admissible=admissible)


@dataclass(frozen=True)
class SymbolClassVerdict:
    completely_monotone: bool
    completely_alternating: bool
    concave: bool
    constant: bool
    max_order: int
    steps: tuple
    tol: float
    abs_tol: float
    window: tuple
    # worst sign violation seen for each property (<= 0 means none beyond tol)
    worst: dict

    def as_dict(self):
        return {
            "completelyMonotone": self.completely_monotone,
            "completelyAlternating": self.completely_alternating,
            "concave": self.concave,
            "constant": self.constant,
            "maxOrder": self.max_order,
            "steps": list(self.steps),
            "tol": self.tol,
            "absTol": self.abs_tol,
            "window": list(self.window),
            "worst": dict(self.worst),
        }


def classify_symbol(spec, grid, max_order=8, steps=None, tol=1e-9):
    """Decide complete monotonicity/alternation, concavity and constancy up to tested scope.

    A property holds "up to order ``max_order`` at ``steps``": the sign conditions
    are checked for every tested order and step on the admissible window. ``tol``
    is relative to ``max|phi|`` on that window.
    """
    if steps is None:
        steps = tuple(m * grid.h for m in (1, 2, 4, 8))
    steps = tuple(float(s) for s in steps)
    if not steps:
        raise ValueError("need at least one difference step")
    profiles = [difference_profile(spec, s, max_order, grid) for s in steps]
    admissible = min(p.admissible for p in profiles)
    phi = profiles[0].order(0)[:admissible]
    abs_tol = tol * float(np.max(np.abs(phi)))

    worst = {"completelyMonotone": -math.inf, "completelyAlternating": -math.inf,
             "concave": -math.inf, "constant": 0.0}
    for prof in profiles:
        for n in range(1, max_order + 1):
            d = prof.table[n][:admissible]
            sign = (-1) ** n
            # violation = how far the required sign is missed
            worst["completelyMonotone"] = max(worst["completelyMonotone"], float(np.max(-sign * d)))
            worst["completelyAlternating"] = max(worst["completelyAlternating"], float(np.max(sign * d)))
            if n == 1:
                worst["constant"] = max(worst["constant"], float(np.max(np.abs(d))))
            if n == 2:
                worst["concave"] = max(worst["concave"], float(np.max(d)))
    if max_order < 2:
        worst["concave"] = math.nan
    if max_order == 0:
        worst = {key: math.nan for key in worst}

    def ok(key):
        return bool(worst[key] <= abs_tol)

    return SymbolClassVerdict(
        completely_monotone=max_order >= 1 and ok("completelyMonotone"),
        completely_alternating=max_order >= 1 and ok("completelyAlternating"),
        concave=max_order >= 2 and ok("concave"),
        constant=max_order >= 1 and ok("constant"),
        max_order=max_order,
        steps=steps,
        tol=tol,
        abs_tol=abs_tol,
        window=(0.0, admissible * grid.h),
        worst=worst,
    )
