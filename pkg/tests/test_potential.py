"""Potential evaluation, certification, envelopes, and the identity battery."""

import json
import math

import numpy as np
import pytest

import oracle
from conftest import assert_close
from gradcert import (
    DegenerateRatioError,
    QuadraticObjective,
    SpectrumSpec,
    certify,
    contraction_constant,
    default_cert_tolerance,
    generate_with_start,
    hs_identity_battery,
    materialize_orthogonal,
    potential_point,
    rho_ag,
    rho_cg,
    rho_optimality_check,
    run,
)
from gradcert.generate import generate_arrays
from gradcert.potential import REPORT_CSV_HEADER


def test_contraction_constants():
    assert contraction_constant("cg", 1.0, 3.0) == pytest.approx(1 + math.sqrt(1 / 3), abs=1e-15)
    assert contraction_constant("ag", 1.0, 3.0) == pytest.approx(1 + 1 / (math.sqrt(3) - 1), abs=1e-15)
    # AG constant is the stronger one whenever kappa > 1
    for kappa in (1.5, 10.0, 1e4, 1e12):
        assert contraction_constant("ag", 1.0, kappa) > contraction_constant("cg", 1.0, kappa)
    with pytest.raises(DegenerateRatioError):
        contraction_constant("ag", 2.0, 2.0)
    # full method names accepted too
    assert contraction_constant("cg_unified", 1.0, 4.0) == contraction_constant("cg", 1.0, 4.0)


def test_rho_values(dim2):
    assert rho_ag(1.0, 3.0, 0) == 0.0
    assert rho_ag(1.0, 3.0, 1) == pytest.approx(math.sqrt(3) - 1, abs=1e-15)
    exact = oracle.cg_exact([[1, 0], [0, 3]], [0, 0], [1, 1], 3, 1)
    rec = exact[1]  # F is the doubled gap already
    rho1 = rho_cg(float(rec["F"]), float(rec["alpha"]), float(rec["prev_res_sq"]), 1)
    assert rho1 == pytest.approx(3 / 25, abs=1e-14)
    assert rho_cg(0.0, 0.5, 1.0, 4) == 0.0  # terminated run
    assert rho_cg(1.0, 0.5, 1.0, 0) == 0.0  # rho_0 is pinned at zero
    with pytest.raises(DegenerateRatioError):
        rho_cg(1.0, 0.0, 1.0, 2)


def test_potential_point_matches_oracle(dim2):
    exact = oracle.cg_exact([[1, 0], [0, 3]], [0, 0], [1, 1], 3, 1)
    trace = run(dim2.obj, "cg_classic", dim2.x0, 5, -math.inf)
    rec = exact[1]
    pt = potential_point(dim2.obj, trace.xs[1], trace.xs[1] - trace.xs[0], 3 / 25, k=1)
    assert_close(pt.w, [float(v) for v in rec["w"]])  # (3/5, -1/5)
    assert pt.psi == pytest.approx(29 / 35, abs=1e-12)
    pt0 = potential_point(dim2.obj, dim2.x0, None, 0.0, k=0)
    assert pt0.psi == pytest.approx(6.0, abs=1e-12)


def test_rho_is_the_norm_minimizer(dim2):
    # perturbing rho away from the closed form can only grow ||w||
    exact = oracle.cg_exact([[1, 0], [0, 3]], [0, 0], [1, 1], 3, 1)
    trace = run(dim2.obj, "cg_classic", dim2.x0, 5, -math.inf)
    s1 = trace.xs[1] - trace.xs[0]
    rho1 = 3 / 25
    base = potential_point(dim2.obj, trace.xs[1], s1, rho1, k=1).w_norm_sq
    for bump in (-0.05, -0.01, 0.01, 0.05):
        moved = potential_point(dim2.obj, trace.xs[1], s1, rho1 + bump, k=1).w_norm_sq
        assert moved > base


def test_certify_frozen_values(dim2):
    trace = run(dim2.obj, "cg_classic", dim2.x0, 5, -math.inf)
    report = certify(trace, dim2.obj)
    assert_close(report.psis, [6.0, 29 / 35, 0.0])
    assert report.first_violation is None
    assert report.chain_ok and report.theorem1_ok and report.daniel_ok
    ag_trace = run(dim2.obj, "ag", dim2.x0, 2, -math.inf)
    ag_report = certify(ag_trace, dim2.obj)
    psi1 = 52 / 9 - 8 * math.sqrt(3) / 3
    psi2 = 88 / 27 - 16 * math.sqrt(3) / 9
    assert_close(ag_report.psis, [6.0, psi1, psi2])
    assert ag_report.first_violation is None
    assert ag_report.common_first_violation is None


def test_default_tolerance_formula(tiny_problem):
    obj = tiny_problem.obj
    kappa = obj.lip / obj.ell
    assert default_cert_tolerance(obj) == pytest.approx(
        1e-9 * (1.0 + kappa * 2.0**-52 * obj.dim), rel=1e-12
    )


def test_certify_flags_a_corrupted_trace(tiny_problem):
    obj, x0 = tiny_problem.obj, tiny_problem.x0
    trace = run(obj, "cg_classic", x0, 30, 1e-10 * obj.f_gap(x0))
    assert certify(trace, obj).first_violation is None
    # a 10% bump on a late iterate lifts its potential far above the
    # already-contracted neighbors, so the chain cannot absorb it
    k = len(trace) - 2
    trace.xs[k] += 0.1 * np.linalg.norm(trace.xs[k]) * np.ones(obj.dim) / math.sqrt(obj.dim)
    poisoned = certify(trace, obj, recompute_gaps=True)
    assert poisoned.first_violation is not None


def test_battery_flags_a_corrupted_trace(tiny_problem):
    obj, x0 = tiny_problem.obj, tiny_problem.x0
    trace = run(obj, "cg_classic", x0, 30, 1e-10 * obj.f_gap(x0))
    assert hs_identity_battery(trace, obj).ok
    trace.xs[len(trace) // 2] *= 1.001
    report = hs_identity_battery(trace, obj)
    assert not report.ok
    assert report.first_failures["gap_drop"] is not None


def test_battery_on_ag_trace_rejected(dim2):
    trace = run(dim2.obj, "ag", dim2.x0, 2, -math.inf)
    with pytest.raises(ValueError):
        hs_identity_battery(trace, dim2.obj)


def test_rho_alignment_orthogonality(tiny_problem):
    obj, x0 = tiny_problem.obj, tiny_problem.x0
    trace = run(obj, "cg_classic", x0, 30, 1e-10 * obj.f_gap(x0))
    misalignment, ok = rho_optimality_check(trace, obj)
    assert ok
    assert misalignment <= 1e-10


def test_potential_is_basis_invariant():
    # evaluating the SAME trace in a rotated basis must not move psi;
    # re-running the solver there would diverge in trailing bits instead
    import dataclasses

    spec = SpectrumSpec(dim=12, ell=1.0, lip=200.0, layout="log_uniform", seed=13)
    obj, truth, x0 = generate_with_start(spec)
    q = materialize_orthogonal(spec)
    a_rot = 0.5 * (q.T @ obj.matrix @ q + (q.T @ obj.matrix @ q).T)
    rot = QuadraticObjective(a_rot, q.T @ obj.rhs, obj.ell, obj.lip)
    x_star_rot = q.T @ truth.x_star
    rot = rot.with_minimizer(x_star_rot, rot.value(x_star_rot))
    trace = run(obj, "cg_classic", x0, 40, 1e-9 * obj.f_gap(x0))
    rotated = dataclasses.replace(trace, xs=trace.xs @ q, ss=trace.ss @ q)
    r1 = certify(trace, obj, recompute_gaps=True)
    r2 = certify(rotated, rot, recompute_gaps=True)
    assert np.allclose(r2.psis, r1.psis, rtol=1e-9, atol=1e-9 * r1.psis[0])
    assert np.allclose(r2.rhos, r1.rhos, rtol=1e-9, atol=1e-12)


def test_chain_implies_envelope(tiny_problem):
    # the telescoped chain is the stronger statement
    obj, x0 = tiny_problem.obj, tiny_problem.x0
    for method in ("cg_classic", "ag"):
        report = certify(run(obj, method, x0, 200, 1e-10 * obj.f_gap(x0)), obj)
        assert report.chain_ok
        assert report.theorem1_ok
        # and psi dominates the gap pointwise: (ell/2) psi >= f_gap
        assert np.all(0.5 * obj.ell * report.psis >= report.f_gaps * (1 - 1e-12))


def test_degenerate_spectrum_certified_at_common_constant():
    a = np.diag([2.0, 2.0])
    obj = QuadraticObjective(a, np.array([2.0, -2.0]), 2.0, 2.0)
    x_star = np.array([1.0, -1.0])
    obj = obj.with_minimizer(x_star, obj.value(x_star))
    trace = run(obj, "ag", np.zeros(2), 5, -math.inf)
    report = certify(trace, obj)
    assert report.degenerate
    assert report.c_value == report.c_common == pytest.approx(2.0)
    assert report.daniel_bounds is None
    assert report.first_violation is None


def test_loose_declared_constants_flagged():
    spec = SpectrumSpec(dim=10, ell=1.0, lip=50.0, layout="uniform", seed=3)
    a, b, x0 = generate_arrays(spec)
    # declare a slack envelope: certificate still valid, tightness is not
    loose = QuadraticObjective(a, b, 0.5, 100.0)
    x_star = np.linalg.solve(a, b)
    loose = loose.with_minimizer(x_star, loose.value(x_star))
    trace = run(loose, "cg_classic", x0, 30, 1e-10 * loose.f_gap(x0))
    report = certify(trace, loose, check_tightness=True)
    assert report.first_violation is None
    assert any("loose" in flag for flag in report.flags)


def test_report_csv_and_json(tmp_path, tiny_problem):
    obj, x0 = tiny_problem.obj, tiny_problem.x0
    report = certify(run(obj, "cg_classic", x0, 30, 1e-10 * obj.f_gap(x0)), obj)
    csv_path = tmp_path / "report.csv"
    report.write_csv(csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == REPORT_CSV_HEADER
    assert lines[0] == "k,psi,ratio,C,pass,f_gap,theorem1_bound,daniel_bound,dist_to_opt,w_norm_sq,rho"
    assert len(lines) == 1 + len(report.psis)
    # final row leaves the forward-looking cells empty
    last = lines[-1].split(",")
    assert last[2] == "" and last[4] == ""
    json_path = tmp_path / "report.json"
    report.write_json(json_path)
    doc = json.loads(json_path.read_text())
    assert doc["summary"]["first_violation"] is None
    assert doc["summary"]["C"] == report.c_value
    assert len(doc["steps"]) == len(report.psis)


def test_certify_without_ground_truth_raises(tiny_problem):
    obj = tiny_problem.obj
    bare = QuadraticObjective(obj.matrix, obj.rhs, obj.ell, obj.lip)
    trace = run(bare, "cg_classic", tiny_problem.x0, 10, -math.inf)
    from gradcert import MissingGroundTruthError

    with pytest.raises(MissingGroundTruthError):
        certify(trace, bare)
    # but passing truth explicitly works
    report = certify(trace, bare, truth=tiny_problem.truth)
    assert report.first_violation is None
