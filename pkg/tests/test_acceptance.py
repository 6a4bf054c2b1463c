"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run directly with ``python tests/test_acceptance.py`` or through pytest; the
lines are repeated in the terminal summary under "acceptance criteria".
"""

import csv
import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES, solve
from zerocurrents.bundle import face_curvature, flat_torus_bundle, gauge_transform
from zerocurrents.experiments import load_config, row_passes, run_experiment
from zerocurrents.mesh import make_flat_torus
from zerocurrents.spectral import heat_apply
from zerocurrents.zeros import winding_indices

CONFIGS = (
    "limit0_bump_torus",
    "limit0_flat_torus",
    "limit_inf_bump_torus",
    "finite_t_bump_torus",
    "theorem2_veronese",
    "theorem4_flat_torus",
    "lemma_flat_torus",
    "coarea_spinor",
)


def record(number, title, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    """Every bundled config run once with one worker and once with four."""
    base = tmp_path_factory.mktemp("acceptance")
    out = {}
    for name in CONFIGS:
        cfg = load_config(name)
        t0 = time.perf_counter()
        report, d1 = run_experiment(cfg, workers=1, output_dir=base / name / "w1")
        elapsed = time.perf_counter() - t0
        _, d4 = run_experiment(cfg, workers=4, output_dir=base / name / "w4")
        out[name] = {"report": report, "dir": Path(d1), "dir4": Path(d4), "elapsed": elapsed}
    return out


def rows_by_label(report):
    return {r["label"]: r for r in report["rows"]}


def sample_rows(run):
    with open(run["dir"] / "samples.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_criterion_1_topological_exactness(runs):
    problems = []
    for name, run in runs.items():
        rep = run["report"]
        chern = rep["info"].get("chern")
        for row in rep["rows"]:
            d = row.get("chern", chern)
            if row["form"] == "one" and not (row["lhs"] == d and row["lhs_stderr"] == 0.0):
                problems.append(f"{name}:{row['label']}")
            if rep["experiment"] == "theorem4" and row["reliable"] and row["lhs"] != d:
                problems.append(f"{name}:{row['label']}")
        if not (run["dir"] / "samples.csv").exists():
            continue
        degrees = {r["label"]: r.get("chern", chern) for r in rep["rows"]}
        for s in sample_rows(run):
            d = degrees.get(s["row"], chern)
            if int(s["n_zeros_plus"]) - int(s["n_zeros_minus"]) != d:
                problems.append(f"{name}:{s['row']}#{s['sample_index']}")
                break
    ok = record(1, "sum of face indices equals the Chern number; eta=1 exact", not problems,
                "all samples and eta=1 rows exact" if not problems else ", ".join(problems[:5]))
    assert ok


def test_criterion_2_hyperplane_sections(runs):
    run = runs["theorem2_veronese"]
    rows = rows_by_label(run["report"])
    bad = [lab for lab, r in rows.items() if r["form"] in ("one", "half") and not r["pass"]]
    ident = rows["d=1:one"]
    exact = ident["lhs"] == 1.0 and ident["lhs_stderr"] == 0.0
    fast = run["elapsed"] <= 120.0
    gaps = ", ".join(f"{lab} gap={r['abs_gap']:.3g}/tol={3 * r['lhs_stderr'] + r['slack']:.3g}"
                     for lab, r in rows.items() if r["form"] == "half")
    ok = record(2, "hyperplane intersections vs Fubini-Study area, d=1,2,3, n=1e4",
                not bad and exact and fast, f"{gaps}; identity exact={exact}; {run['elapsed']:.1f}s")
    assert ok


def test_criterion_3_embedding_lemma(runs):
    run = runs["lemma_flat_torus"]
    rows = [r for r in run["report"]["rows"] if r["label"].endswith(":lemma")]
    detail = ", ".join(f"{r['t_label']}: {r['n_mismatch']}/{r['n_samples']} mismatched" for r in rows)
    ok = record(3, "intersection current of the heat kernel embedding equals minus the zero current",
                all(r["n_mismatch"] == 0 for r in rows), detail)
    assert ok


def test_criterion_4_small_time_limit(runs):
    bump = runs["limit0_bump_torus"]["report"]
    flat = runs["limit0_flat_torus"]["report"]
    rows_ok = all(r["pass"] for r in bump["rows"])
    (mono,) = [c for c in bump["checks"] if c["name"] == "bump_gap_monotone"]
    control = [r for r in flat["rows"] if r["form"] == "half"]
    control_ok = all(abs(r["lhs"] - 1.5) <= 3 * r["lhs_stderr"] for r in control)
    gaps = ", ".join(f"{g:.4f}" for g in mono["values"])
    ctrl = ", ".join(f"{r['lhs']:.4f}+-{r['lhs_stderr']:.4f}" for r in control)
    detail = f"rows pass={rows_ok}; aligned gaps (16h2, 8h2, 4h2)={gaps} monotone={mono['pass']}; control {ctrl}"
    ok = record(4, "expected zero current tends to the curvature form as t -> 0",
                rows_ok and mono["pass"] and control_ok, detail)
    assert ok


def test_criterion_5_ground_state_limit(runs):
    rep = runs["limit_inf_bump_torus"]["report"]
    info = rep["info"]
    rows = rows_by_label(rep)
    match = rows["t=gap(1e-9):ground_match"]
    weight = match["excited_weight"]
    ok = record(5, "zero currents equal the ground state current at large t",
                info["ground_simple"] and weight < 1e-8 and match["lhs"] == 1.0 and match["lhs_stderr"] == 0.0,
                f"lambda0={info['lambda_0']:.4f} lambda1={info['lambda_1']:.4f} simple={info['ground_simple']}; "
                f"excited weight {weight:.2e}; {int(match['lhs'] * match['n_samples'])}/{match['n_samples']} samples match")
    assert ok


def test_criterion_6_curvature_convergence(runs):
    rep = runs["theorem4_flat_torus"]["report"]
    checks = {c["name"]: c for c in rep["checks"]}
    chern_ok = all(r["lhs"] == 1 for r in rep["rows"] if r["reliable"])
    sup, ref = checks["sup_err_monotone"], checks["refinement_monotone"]
    refined = ", ".join(f"{v:.4g}" for v in ref["values"])
    ok = record(6, "pullback curvature converges to the bundle curvature",
                chern_ok and sup["pass"] and ref["pass"],
                f"sup err {sup['values'][0]:.3g} -> {sup['values'][-1]:.3g} monotone={sup['pass']}; "
                f"refinement {refined} monotone={ref['pass']}; chern=1 {chern_ok}")
    assert ok


def test_criterion_7_degree(runs):
    rows = rows_by_label(runs["coarea_spinor"]["report"])
    one, two = rows["d=1:one"], rows["d=2:one"]
    ok = record(7, "signed preimage count equals the degree",
                one["lhs"] == 1.0 and one["lhs_stderr"] == 0.0 and abs(two["lhs"] - 2.0) <= 3 * two["lhs_stderr"] + two["roundoff"],
                f"identity {one['lhs']}+-{one['lhs_stderr']}; square {two['lhs']}+-{two['lhs_stderr']}")
    assert ok


def test_criterion_8_determinism(runs):
    differ = []
    for name, run in runs.items():
        for f in ("report.json", "samples.csv"):
            a, b = run["dir"] / f, run["dir4"] / f
            if a.exists() != b.exists() or (a.exists() and a.read_bytes() != b.read_bytes()):
                differ.append(f"{name}/{f}")
    ok = record(8, "outputs byte-identical for 1 and 4 workers", not differ,
                f"{len(runs)} configs compared" if not differ else ", ".join(differ))
    assert ok


def test_report_pass_flags_recomputable(runs):
    for run in runs.values():
        rep = json.loads((run["dir"] / "report.json").read_text())
        assert rep["schema"] == 1
        for row in rep["rows"]:
            assert row["pass"] == row_passes(row)
        assert rep["all_pass"] == (all(r["pass"] for r in rep["rows"]) and all(c["pass"] for c in rep["checks"]))


_contract_failures = []
_contract_cases = [0]


@given(st.integers(3, 7), st.integers(-4, 4), st.integers(0, 2**32 - 1), st.floats(0.001, 0.3), st.floats(0.001, 0.3))
def _contracts(N, d, seed, s, t):
    _contract_cases[0] += 1
    m = make_flat_torus(N)
    rng = np.random.default_rng(seed)
    u = np.exp(2j * np.pi * rng.random(m.n_vertices))
    b = flat_torus_bundle(m, d)
    g = gauge_transform(b, u)
    pair, spec = solve(b)
    _, spec_g = solve(g)
    norm_a = abs(pair.stiffness).sum(axis=1).max()
    psi = rng.standard_normal(m.n_vertices) + 1j * rng.standard_normal(m.n_vertices)
    semi = np.max(np.abs(heat_apply(spec, s + t, psi) - heat_apply(spec, s, heat_apply(spec, t, psi))))
    i1, bad1 = winding_indices(b, psi)
    i2, bad2 = winding_indices(g, u * psi)
    checks = {
        "residual": spec.residuals(pair).max() <= 1e-8 * norm_a * np.sqrt(spec.mass.max()),
        "orthonormality": spec.orthonormality_error() <= 1e-10,
        "semigroup": semi <= 1e-12 * np.max(np.abs(psi)),
        "gauge spectrum": np.max(np.abs(spec.eigenvalues - spec_g.eigenvalues)) <= 1e-10 * max(1.0, spec.eigenvalues.max()),
        "gauge curvature": np.max(np.abs(np.angle(np.exp(1j * (face_curvature(b) - face_curvature(g)))))) <= 1e-12,
        "gauge currents": bool(bad1[0]) or (not bad2[0] and np.array_equal(i1, i2)),
    }
    failed = [k for k, v in checks.items() if not v]
    if failed:
        _contract_failures.append((N, d, seed, failed))
    assert not failed


def test_criterion_9_numerical_contracts():
    _contract_failures.clear()
    _contract_cases[0] = 0
    try:
        _contracts()
    finally:
        ok = not _contract_failures and _contract_cases[0] >= 100
        record(9, "eigen residual, orthonormality, semigroup and gauge invariance on random inputs", ok,
               f"{_contract_cases[0]} randomized cases, {len(_contract_failures)} failing")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
