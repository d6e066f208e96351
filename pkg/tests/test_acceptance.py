"""Acceptance suite: one test per criterion, each emitting a pass/fail line.

1. Geometry property suite (500 randomized instances per property, < 30 s).
2. Reduction equivalence of verify_hcs / verify_has on solver output.
3. Synthesis correctness on the analytic 1D self-loops.
4. Cruise benchmark M = 1: optimal synthesis, certified, limit respected.
5. MPC reproduction: safe mode survives 150 steps; unsafe mode fails after
   the 30 s event.
6. Deterministic artifacts: byte-identical CSV and SVG across runs.
"""

import time

import numpy as np
import pytest

import hybridinv as hv
from hybridinv.geometry import (cq_to_quad, dual_quadratic, householder,
                                quad_to_cq, recover_primal)
from hybridinv.mpc import MpcScenario, simulate
from hybridinv.plot import plot_speed, read_trajectory_csv

from conftest import (make_self_loop_has, make_two_node_hcs,
                      record_acceptance)


def random_ellipsoid(rng, dim):
    A = rng.standard_normal((dim, dim))
    return hv.EllipsoidCQ(Q=A @ A.T + 0.3 * np.eye(dim), c=rng.standard_normal(dim))


def test_criterion_1_geometry_properties():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()

    # Lemma 8 round trips to 1e-9.
    lemma8_ok = True
    for _ in range(500):
        dim = int(rng.integers(1, 6))
        e = random_ellipsoid(rng, dim)
        lam = float(rng.uniform(0.1, 10.0))
        back, lam_back = quad_to_cq(cq_to_quad(e, lam))
        lemma8_ok &= abs(lam_back - lam) <= 1e-9 * lam
        lemma8_ok &= bool(np.allclose(back.Q, e.Q, rtol=1e-9, atol=1e-11))
        lemma8_ok &= bool(np.allclose(back.c, e.c, rtol=1e-9, atol=1e-11))

    # Householder reflections: H symmetric, H^2 = I to 1e-12.
    householder_ok = True
    for _ in range(500):
        dim = int(rng.integers(1, 8))
        H = householder(rng.standard_normal(dim))
        householder_ok &= float(np.abs(H - H.T).max()) <= 1e-12
        householder_ok &= float(np.abs(H @ H - np.eye(dim + 1)).max()) <= 1e-12

    # Polar-map sampled identity: halfspace containment via the support
    # function agrees with dual-cone membership on >= 999/1000 samples.
    agree = 0
    for _ in range(500):
        dim = int(rng.integers(1, 5))
        e = random_ellipsoid(rng, dim)
        cone, _ = dual_quadratic(e, e.c)
        for _ in range(2):
            a = rng.standard_normal(dim)
            beta = float(rng.normal(e.support(a), 1.0))
            y = np.append(-a, beta)
            contained = e.support(a) <= beta
            in_cone = cone.contains(y) and beta - a @ e.c >= 0
            if in_cone == contained or abs(e.support(a) - beta) <= 1e-8:
                agree += 1
    polar_ok = agree >= 999

    # Dual-quadratic / primal round trip to 1e-7.
    duality_ok = True
    for _ in range(500):
        dim = int(rng.integers(1, 5))
        e = random_ellipsoid(rng, dim)
        h = e.c + 0.3 * rng.standard_normal(dim) / np.sqrt(np.trace(e.Q))
        if e.value(h) >= 0.9:
            h = e.c
        cone, _ = dual_quadratic(e, h)
        back = recover_primal(cone)
        duality_ok &= bool(np.allclose(back.Q, e.Q, rtol=1e-7, atol=1e-9))
        duality_ok &= bool(np.allclose(back.c, e.c, rtol=1e-7, atol=1e-9))

    elapsed = time.perf_counter() - t0
    passed = lemma8_ok and householder_ok and polar_ok and duality_ok and elapsed < 30.0
    record_acceptance(1, "geometry property suite", passed,
                      f"polar agreement {agree}/1000, {elapsed:.1f}s")
    assert lemma8_ok, "Lemma 8 round trip exceeded 1e-9"
    assert householder_ok, "Householder involution exceeded 1e-12"
    assert polar_ok, f"polar identity agreement {agree}/1000"
    assert duality_ok, "dual/primal round trip exceeded 1e-7"
    assert elapsed < 30.0, f"suite took {elapsed:.1f}s"


def test_criterion_2_reduction_equivalence():
    sys0 = make_two_node_hcs()
    lifted, trace = hv.lift_inputs(sys0, merge=True)
    has = hv.to_algebraic(lifted)
    sets, report = hv.synthesize(has)
    assert sets is not None, report.status
    has_report = hv.verify_has(has, sets, samples=1000, tol=1e-6)
    hcs_report = hv.verify_hcs(sys0, trace.original_sets(sets),
                               samples=1000, tol=1e-6)
    gap = abs(has_report.worst_residual - hcs_report.worst_residual)
    passed = (has_report.verdict == hcs_report.verdict) and gap <= 1e-6
    record_acceptance(2, "reduction equivalence", passed,
                      f"{has_report.verdict}/{hcs_report.verdict}, "
                      f"residual gap {gap:.2e}")
    assert has_report.verdict == hcs_report.verdict
    assert gap <= 1e-6


def test_criterion_3_analytic_1d_synthesis():
    sets, report = hv.synthesize(make_self_loop_has(0.5))
    assert report.status == "optimal"
    e = sets["q"]
    # Interval volume 2 / sqrt(Q); the maximal invariant set is [-1, 1].
    volume = 2.0 / np.sqrt(e.Q[0, 0])
    vol_ok = abs(volume - 2.0) <= 0.01 * 2.0
    lam_ok = abs(report.node_lambda["q"] - 1.0) <= 1e-4

    _, exp_report = hv.synthesize(make_self_loop_has(2.0))
    infeasible_ok = "infeasible" in exp_report.status

    passed = vol_ok and lam_ok and infeasible_ok
    record_acceptance(3, "1D analytic synthesis", passed,
                      f"volume {volume:.6f}, lambda {report.node_lambda['q']:.6f}, "
                      f"expanding {exp_report.status}")
    assert vol_ok and lam_ok and infeasible_ok


def test_criterion_4_cruise_benchmark(cruise_system, cruise_reduction,
                                      cruise_synthesis):
    _, _, trace = cruise_reduction
    sets, report, elapsed = cruise_synthesis
    original = trace.original_sets(sets)
    vreport = hv.verify_hcs(cruise_system, original, samples=1000, tol=1e-6)

    # Analytic speed-limit check on the enforced node q_a0.
    e = original["q_a0"]
    dirs = [np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])]
    limit_ok = all(e.support(a) <= 15.6 + 1e-6 for a in dirs)

    passed = (report.status == "optimal" and elapsed < 60.0
              and vreport.verdict == "PASS" and limit_ok)
    record_acceptance(4, "cruise benchmark M=1", passed,
                      f"{report.status} in {elapsed:.1f}s, verify {vreport.verdict}, "
                      f"v0 support {e.support(dirs[0]):.4f}")
    assert report.status == "optimal"
    assert elapsed < 60.0
    assert vreport.verdict == "PASS", vreport.to_json()
    assert limit_ok


@pytest.fixture(scope="module")
def mpc_runs(cruise_system, cruise_reduction, cruise_synthesis):
    _, _, trace = cruise_reduction
    sets, _, _ = cruise_synthesis
    safe = simulate(MpcScenario(
        system=cruise_system, initial_node="q_d0",
        initial_state=np.array([0.0, 10.0, 10.0]), horizon=3, mode="safe",
        duration=60.0, events=((30.0, "a"),), sets=sets, trace=trace))
    unsafe = simulate(MpcScenario(
        system=cruise_system, initial_node="q_d0",
        initial_state=np.array([0.0, 10.0, 10.0]), horizon=23, mode="unsafe",
        duration=60.0, events=((30.0, "a"),)))
    return safe, unsafe


def test_criterion_5_mpc_reproduction(cruise_system, mpc_runs):
    safe, unsafe = mpc_runs
    safe_ok = safe.feasible and len(safe.records) == 150
    states_ok = all(cruise_system.nodes[r.node].safe_set.contains(r.state, tol=1e-6)
                    for r in safe.records)
    bad = unsafe.first_infeasible_step()
    unsafe_ok = bad is not None and bad * 0.4 >= 30.0

    passed = safe_ok and states_ok and unsafe_ok
    record_acceptance(5, "MPC reproduction", passed,
                      f"safe {len(safe.records)}/150 feasible, unsafe H=23 "
                      f"infeasible at t={None if bad is None else bad * 0.4:.1f}s")
    assert safe_ok, f"safe run stopped at step {safe.first_infeasible_step()}"
    assert states_ok
    assert unsafe_ok, f"unsafe run: first infeasible step {bad}"


def test_criterion_6_deterministic_artifacts(cruise_system, cruise_reduction,
                                             cruise_synthesis, tmp_path):
    _, _, trace = cruise_reduction
    sets, _, _ = cruise_synthesis

    def run(path):
        traj = simulate(MpcScenario(
            system=cruise_system, initial_node="q_d0",
            initial_state=np.array([0.0, 10.0, 10.0]), horizon=3, mode="safe",
            duration=8.0, events=((4.0, "a"),), sets=sets, trace=trace))
        traj.to_csv(path)
        return path.read_bytes()

    csv1 = run(tmp_path / "run1.csv")
    csv2 = run(tmp_path / "run2.csv")
    csv_ok = csv1 == csv2

    data = read_trajectory_csv(tmp_path / "run1.csv")
    svg_ok = plot_speed(data) == plot_speed(read_trajectory_csv(tmp_path / "run2.csv"))

    passed = csv_ok and svg_ok
    record_acceptance(6, "deterministic artifacts", passed,
                      f"csv identical: {csv_ok}, svg identical: {svg_ok}")
    assert csv_ok and svg_ok
