"""Acceptance criteria, one test each.

Every test records a single ``PASS``/``FAIL`` line (shown in the pytest terminal
summary, or printed when this file is run as a script). Tolerances are the
stated ones; nothing is loosened to make a line pass.
"""

import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from semigroup_lab.cli import parse_config
from semigroup_lab.grid import GridSpec
from semigroup_lab.grid_operator import OperatorExpr, adjoint, compose, make_weighted_translation, to_dense
from semigroup_lab.rkhs import (
    check_intertwining,
    check_psd,
    diagonal_orthogonality,
    evaluate_kernel,
    four_factor_coefficient,
    kernel_coefficients,
    sample_polydisc,
)
from semigroup_lab.spectrum import (
    check_circular_symmetry,
    check_no_point_spectrum,
    min_singular_value,
    polydisc_bounds,
    radius_closed_form,
    spectral_radius,
)
from semigroup_lab.symbol import SymbolSpec, classify_symbol
from semigroup_lab.tuples import (
    TranslationTuple,
    check_analytic,
    check_kernel_condition,
    check_orthogonality,
    classify,
    joint_kernel,
    spherical_cauchy_dual,
    toral_cauchy_dual,
    toral_defect,
)

ROOT = Path(__file__).resolve().parents[1]
CATALOG_CONFIG = ROOT / "configs" / "paper_catalog.json"
GRID = GridSpec.from_extent(0.25, 64)
SMALL = GridSpec(0.25, 64)

RESULTS = {}

SYMBOLS = {
    "constant": SymbolSpec.constant(2.0),
    "x+1": SymbolSpec.affine(1.0, 1.0),
    "sqrt(x+1)": SymbolSpec.sqrt_affine(),
    "log(x+2)": SymbolSpec.log_shift(),
    "moebius 0.5": SymbolSpec.moebius(0.5),
    "2-e^-x": SymbolSpec.two_minus_exp(),
    "1/(x+1)": SymbolSpec.reciprocal_affine(),
    "moebius 2": SymbolSpec.moebius(2.0),
    "e^-x": SymbolSpec.exp(-1.0),
    "e^x": SymbolSpec.exp(1.0),
}


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}"
    RESULTS[number] = line
    print(line)
    return passed


def catalog_tuples(d=None):
    cfg = parse_config(CATALOG_CONFIG.read_text())
    out = []
    for tc in cfg.tuples:
        tt = tc.build(cfg.grid, 1e-10)
        if tt.commutes and (d is None or tt.d == d):
            out.append((tc.name, tt))
    return out


def single(name, grid=GRID):
    return TranslationTuple([SYMBOLS[name]], [1.0], grid)


def fmt_fail(names, limit=4):
    more = f" (+{len(names) - limit} more)" if len(names) > limit else ""
    return ", ".join(names[:limit]) + more


# ---------------------------------------------------------------------------

def test_01_oracle_equivalence():
    rng = np.random.default_rng(2024)
    names = sorted(SYMBOLS)
    worst = 0.0
    for _ in range(200):
        expr = OperatorExpr.identity(SMALL)
        dense = np.eye(SMALL.n)
        for _ in range(rng.integers(1, 7)):
            op = make_weighted_translation(SYMBOLS[names[rng.integers(len(names))]],
                                           [0.25, 0.5, 1.0, 1.5][rng.integers(4)], SMALL)
            if rng.integers(2):
                op = adjoint(op)
            expr = compose(expr, op)
            dense = dense @ to_dense(op)
        worst = max(worst, float(np.max(np.abs(to_dense(expr) - dense))))
    ok = record(1, "oracle equivalence", worst <= 1e-12,
                f"200 random compositions (<= 6 factors, n=64), max entry error {worst:.2e} (tol 1e-12)")
    assert ok


def test_02_classification_catalog():
    problems = []
    rep = classify(single("constant"))
    if not rep.toral_isometry:
        problems.append("constant not isometry")
    tt = single("x+1")
    b2 = toral_defect(tt, (2,))
    b1 = toral_defect(tt, (1,))
    if not (np.max(np.abs(b2.values)) <= 1e-10 and np.max(b1.values) <= 1e-10):
        problems.append("x+1 not a 2-isometry")
    if not classify(single("sqrt(x+1)"), 2).toral.hyperexpansion(2):
        problems.append("sqrt(x+1) not 2-hyperexpansive")
    for name in ("log(x+2)", "moebius 0.5", "2-e^-x"):
        if not classify(single(name), 8).toral.complete_hyperexpansion:
            problems.append(f"{name} not completely hyperexpansive")
    for name in ("1/(x+1)", "moebius 2", "e^-x"):
        cm = classify_symbol(SYMBOLS[name], GRID, 8).completely_monotone
        contraction = classify(single(name), 1).toral.order(1).contraction
        if not (cm and contraction):
            problems.append(f"{name} not CM contraction")
    ok = record(2, "classification catalog", not problems,
                "all 10 verdicts reproduced up to order 8 on the safe window" if not problems else "; ".join(problems))
    assert ok


def test_03_isometry_iff_constant():
    flagged = []
    for c in (0.5, 1.0, 7.0):
        if not classify(TranslationTuple([SymbolSpec.constant(c)], [1.0], GRID), 2).toral_isometry:
            flagged.append(f"constant {c} missed")
    for name, spec in SYMBOLS.items():
        if name == "constant":
            continue
        if classify(TranslationTuple([spec], [1.0], GRID), 2).toral_isometry:
            flagged.append(f"{name} wrongly flagged")
    ok = record(3, "toral isometry iff constant", not flagged,
                "isometry flagged for constants only" if not flagged else "; ".join(flagged))
    assert ok


def test_04_cauchy_dual_identities():
    problems = []
    worst_id = worst_formula = worst_ex = 0.0
    for name, tt in catalog_tuples():
        worst_id = max(worst_id, toral_cauchy_dual(tt).identity_residual)
        if tt.d == 2:
            worst_formula = max(worst_formula, spherical_cauchy_dual(tt).formula_residual)
    sph = TranslationTuple([SymbolSpec.constant(1.0), SymbolSpec.constant(3.0)], [1.0, 1.5], GRID,
                           scale=[2 ** -0.5] * 2)
    tor = TranslationTuple([SymbolSpec.constant(1.0), SymbolSpec.constant(3.0)], [1.0, 1.5], GRID)
    ss = TranslationTuple([SYMBOLS["log(x+2)"]] * 2, [1.0, 1.0], GRID)
    cases = [
        (spherical_cauchy_dual(sph).ops, sph.ops),
        (spherical_cauchy_dual(tor).ops, [op / 2 for op in tor.ops]),
        (spherical_cauchy_dual(ss).ops, [op / 2 for op in toral_cauchy_dual(ss).ops]),
    ]
    for duals, targets in cases:
        for d, t in zip(duals, targets):
            worst_ex = max(worst_ex, d.max_abs_difference(t, d.safe_size))
    for label, value in (("S'*S=I", worst_id), ("spherical formula", worst_formula), ("scaled-pair equalities", worst_ex)):
        if not value <= 1e-12:
            problems.append(f"{label} {value:.2e}")
    ok = record(4, "Cauchy dual identities", not problems,
                f"S'*S=I {worst_id:.1e}, d=2 formula {worst_formula:.1e}, S^s equalities {worst_ex:.1e} (tol 1e-12)")
    assert ok


def test_05_structure_suite():
    failures = {"kernel dim": [], "Gram primal": [], "Gram dual": [], "kernel condition": [], "analytic": []}
    worst_gram = 0.0
    tuples = catalog_tuples()
    for name, tt in tuples:
        if joint_kernel(tt).dimension != round(tt.t_min / tt.grid.h):
            failures["kernel dim"].append(name)
        for which in ("primal", "dual"):
            rep = check_orthogonality(tt, 3, which, 1e-10)
            worst_gram = max(worst_gram, rep.max_cross_block)
            if not rep.passed:
                failures[f"Gram {which}"].append(name)
        if not check_kernel_condition(tt, 3 if tt.d == 1 else (3, 3)).holds:
            failures["kernel condition"].append(name)
        if not check_analytic(tt, 3).support_bound_exact:
            failures["analytic"].append(name)
    bad = {k: v for k, v in failures.items() if v}
    detail = f"{len(tuples)} catalog tuples; max Gram cross-block cosine {worst_gram:.2e} (tol 1e-10)"
    if bad:
        detail += "; failing: " + "; ".join(f"{k} [{len(v)}: {fmt_fail(v)}]" for k, v in bad.items())
    ok = record(5, "structure suite", not bad, detail)
    assert ok


def test_06_analytic_model():
    rng = np.random.default_rng(6)
    inter_fail, diag_fail = [], []
    worst_inter = worst_diag = worst_four = 0.0
    for name, tt in catalog_tuples():
        f = np.zeros(tt.grid.n)
        support = tt.grid.n - max(tt.steps)
        f[:support] = rng.standard_normal(support)
        rep = check_intertwining(tt, f, 4, 1e-10)
        worst_inter = max(worst_inter, max(rep.residuals))
        if not rep.passed:
            inter_fail.append(name)
        diag, _ = diagonal_orthogonality(tt, 4)
        worst_diag = max(worst_diag, diag)
        if diag > 1e-12:
            diag_fail.append(name)
        if tt.d == 2:
            s = kernel_coefficients(tt, 8)
            # relative: scaled pairs reach c_n ~ 6e4, where one ulp already exceeds 1e-12
            for n, c in s.coefficients.items():
                ref = four_factor_coefficient(tt, n)
                worst_four = max(worst_four, float(np.max(np.abs(c - ref) / np.abs(ref))))
    passed = not inter_fail and not diag_fail and worst_four <= 1e-12
    detail = (f"intertwining max {worst_inter:.2e} (tol 1e-10), diagonal orthogonality max {worst_diag:.2e}"
              f" (tol 1e-12), four-factor relative {worst_four:.1e} (tol 1e-12)")
    if inter_fail:
        detail += f"; intertwining fails [{len(inter_fail)}: {fmt_fail(inter_fail)}]"
    if diag_fail:
        detail += f"; diagonal fails [{len(diag_fail)}: {fmt_fail(diag_fail)}]"
    ok = record(6, "analytic model", passed, detail)
    assert ok


def test_07_kernel_values():
    tt = TranslationTuple([SymbolSpec.constant(1.0), SymbolSpec.constant(1.0)], [1.0, 1.0], GRID)
    s = kernel_coefficients(tt, 16)
    v = evaluate_kernel(s, [0.5, 0.5], [0.5, 0.5], 0.0)
    err = abs(v.value - 16 / 9)
    eq = TranslationTuple([SYMBOLS["log(x+2)"]] * 2, [1.0, 1.5], GRID)
    se = kernel_coefficients(eq, 10)
    x = GRID.x[: eq.k_min]
    worst = max(float(np.max(np.abs(c - np.log(x + 2) / np.log(x + 2 + n[0] * 1.0 + n[1] * 1.5))))
                for n, c in se.coefficients.items())
    passed = err <= v.tail_bound and worst <= 1e-12
    ok = record(7, "kernel values", passed,
                f"k((.5,.5),(.5,.5)) = {v.value.real:.10f}, |err vs 16/9| {err:.2e} <= tail {v.tail_bound:.2e};"
                f" phi1=phi2 coefficients max dev {worst:.1e}")
    assert ok


def test_08_psd():
    rng = np.random.default_rng(8)
    failing, worst = [], math.inf
    pairs = catalog_tuples(d=2)
    for name, tt in pairs:
        s = kernel_coefficients(tt, min(12, (tt.grid.n - tt.k_min) // sum(tt.steps)))
        rep = check_psd(s, sample_polydisc(s.inner_radius, 8, 0.9, rng), 0.0, 1e-9)
        worst = min(worst, rep.min_eigenvalue / rep.trace)
        if not rep.psd:
            failing.append(name)
    ok = record(8, "PSD kernel Gram matrices", not failing,
                f"{len(pairs)} catalog pairs, 8 points each, min eigenvalue/trace {worst:.2e} (tol -1e-9)"
                + (f"; failing {fmt_fail(failing)}" if failing else ""))
    assert ok


def test_09_spectrum():
    problems = []
    S = single("e^-x").ops[0]
    r = spectral_radius(S, 32, radius_closed_form(SYMBOLS["e^-x"], 1.0))
    if abs(r.value - math.exp(-0.5)) > 1e-6 or abs(r.root - math.exp(-0.5)) > 2e-2:
        problems.append("e^-x radius")
    const = TranslationTuple([SymbolSpec.constant(1.0), SymbolSpec.constant(2.0)], [1.0, 1.5], GRID)
    b = polydisc_bounds(const)
    if not (b.polydisc_equality and b.inner.tolist() == [1.0, 1.0] and b.outer.tolist() == [1.0, 1.0]):
        problems.append("constants polydisc")
    rng = np.random.default_rng(9)
    pair = TranslationTuple([SYMBOLS["log(x+2)"]] * 2, [1.0, 1.5], GRID)
    sym = check_circular_symmetry(pair, rng.uniform(0, 2 * math.pi, 5))
    if not sym.passed:
        problems.append("M_theta")
    lams = rng.uniform(0.05, 1.5, 10) * np.exp(2j * math.pi * rng.uniform(size=10))
    ps = check_no_point_spectrum(single("log(x+2)").ops[0], lams)
    if not (ps.only_zero and all(c == 0 for c in ps.as_dict()["freeCounts"])):
        problems.append("point spectrum")
    small = TranslationTuple([SYMBOLS["e^-x"]], [1.0], SMALL)
    inner = polydisc_bounds(small).inner[0]
    sv = min(min_singular_value(small.ops[0], rho * inner * np.exp(1j * th))
             for rho in (0.0, 0.3, 0.6, 0.9) for th in np.linspace(0, 2 * math.pi, 8, endpoint=False))
    if not sv > 0.01:
        problems.append("SVD")
    ok = record(9, "spectrum", not problems,
                f"r(S)={r.value:.8f} (closed form), root {r.root:.6f}, constants r=R=1 flag {b.polydisc_equality},"
                f" M_theta max {max(sym.residuals):.1e}, only-zero for 10 lambda {ps.only_zero},"
                f" min sigma(S-lambda) {sv:.3f}" + (f"; failing: {', '.join(problems)}" if problems else ""))
    assert ok


def test_10_cli(tmp_path):
    cmd = [sys.executable, "-m", "semigroup_lab.cli"]
    verify = subprocess.run(cmd + ["verify", "--config", str(CATALOG_CONFIG), "--out", str(tmp_path / "v.json")],
                            capture_output=True, text=True)
    outs = []
    for i in range(2):
        out = tmp_path / f"k{i}.json"
        subprocess.run(cmd + ["kernel", "--config", str(CATALOG_CONFIG), "--out", str(out)], check=True)
        report = json.loads(out.read_text())
        report.pop("timings")
        outs.append(json.dumps(report, sort_keys=True))
    deterministic = outs[0] == outs[1]
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid": {"h": 0.25,, }')
    parse_code = subprocess.run(cmd + ["classify", "--config", str(bad)], capture_output=True, text=True)
    bad.write_text('{"grid": {"h": 0.5, "x_max": 64}, "tuple": {"symbols": [{"kind": "constant", "c": 1}], "t": [0.3]}}')
    valid_code = subprocess.run(cmd + ["classify", "--config", str(bad)], capture_output=True, text=True)
    errors_ok = (parse_code.returncode == 2 and "ParseError" in parse_code.stderr
                 and valid_code.returncode == 2 and "ValidationError" in valid_code.stderr)
    failed_checks = sorted({line.split(":")[-1] for line in verify.stderr.splitlines() if line.startswith("FAIL")})
    passed = verify.returncode == 0 and deterministic and errors_ok
    ok = record(10, "CLI", passed,
                f"verify on catalog exit {verify.returncode}"
                + (f" (failing checks: {', '.join(failed_checks)})" if failed_checks else "")
                + f", deterministic report {deterministic}, malformed configs exit 2 {errors_ok}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
