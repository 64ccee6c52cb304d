"""End-to-end acceptance suite.

Each test covers one acceptance criterion and prints a single PASS line on
success (run with -s to see them).  Tolerances are part of the contract and
must not be loosened.
"""

import json
import math

import numpy as np
import pytest

from laxflow.cli import main, parse_time_expr
from laxflow.diagnostics import (
    fit_rate,
    run_bound_suite,
    run_convergence_study,
    run_resolvent_convergence,
)
from laxflow.scheme import (
    SchemeConfig,
    full_l2,
    hardy_l2,
    make_schedule,
    mass,
    run_scheme,
)
from laxflow.spectral import (
    InitialProfile,
    analyze_profile,
    l2_norm,
    project_hardy,
    square_wave_coefficient,
)
from oracles import scheme_by_brute_force

SWEEP_TIMES = np.linspace(-10.0, 10.0, 41)


def rand_profile(seed, norm=0.5, s=1.0):
    return InitialProfile("random-sobolev", {"s": s, "seed": seed, "norm": norm})


def sweep_runs(K=64, kinds=("constant", "half-staircase", "full-staircase")):
    """The shared conservation sweep: equations x schedules x profiles."""
    for equation in ("BO", "CCM-defocusing"):
        for kind in kinds:
            for profile in (rand_profile(0), InitialProfile("square-wave")):
                sched = make_schedule(kind, K)
                cfg = SchemeConfig(equation, sched, SWEEP_TIMES, profile)
                u0 = analyze_profile(profile, K, hardy=(equation != "BO"))
                yield equation, kind, u0, run_scheme(cfg)


def test_01_mass_conservation():
    for equation, kind, u0, out in sweep_runs():
        c0 = u0.coeff(0).real
        for t in SWEEP_TIMES:
            assert abs(mass(out, t) - c0) <= 1e-12, (equation, kind, t)
    print("ACCEPTANCE 1: PASS - mass conserved to 1e-12 across the sweep")


def test_02_l2_non_increase():
    for equation, kind, u0, out in sweep_runs():
        for t in SWEEP_TIMES:
            assert hardy_l2(out, t) <= out.seed_norm + 1e-10, (equation, kind, t)
            if equation == "BO":
                assert full_l2(out, t) <= l2_norm(u0) + 1e-10, (kind, t)
    print("ACCEPTANCE 2: PASS - L2 norms never exceed the initial norms + 1e-10")


def test_03_exact_l2_preservation_and_telescoping():
    K = 64
    for equation, kind, _u0, out in sweep_runs(K=K):
        # telescoping identity for every schedule
        for i, t in enumerate(SWEEP_TIMES):
            tail = np.linalg.norm(out.final_iterate[:, i]) ** 2
            total = tail + hardy_l2(out, t) ** 2
            assert abs(total - out.seed_norm**2) <= 1e-10, (equation, kind, t)
        if kind in ("half-staircase", "full-staircase"):
            norms = [hardy_l2(out, t) for t in SWEEP_TIMES]
            assert max(norms) - min(norms) <= 1e-10, (equation, kind)
            assert np.max(np.abs(out.final_iterate)) <= 1e-10, (equation, kind)
    print("ACCEPTANCE 3: PASS - exact preservation and telescoping hold to 1e-10")


def test_04_linear_flow_exactness():
    K = 128
    ts = np.array([-1000.0, -1.0, 0.1, 1.0, 1000.0])
    sched = make_schedule("linear-case", K)
    ks = np.arange(K)
    for equation, alpha in (("BO", 1), ("CCM-defocusing", -1)):
        u0 = analyze_profile(rand_profile(1), K, hardy=(equation != "BO"))
        h0 = project_hardy(u0) if equation == "BO" else u0
        out = run_scheme(SchemeConfig(equation, sched, ts, u0))
        for i, t in enumerate(ts):
            expect = np.exp(1j * alpha * t * ks**2) * h0.padded(K)
            err = np.max(np.abs(out.coeffs[i] - expect))
            assert err <= 1e-10, (equation, t, err)
    print("ACCEPTANCE 4: PASS - linear flow exact to 1e-10 even at |t| = 1000")


def test_05_brute_force_oracle_equivalence():
    K = 8
    sched = make_schedule("custom", K, custom_values=[8, 6, 8, 4, 8, 2, 8, 1])
    for equation in ("BO", "CCM-focusing", "CCM-defocusing"):
        for seed in range(5):
            u0 = analyze_profile(rand_profile(seed, norm=0.4), K,
                                 hardy=(equation != "BO"))
            h0 = project_hardy(u0) if equation == "BO" else u0
            t = 0.9
            out = run_scheme(SchemeConfig(equation, sched, np.array([t]), u0))
            oracle = scheme_by_brute_force(u0.coeff, h0.coeffs, sched.values, equation, t)
            err = np.max(np.abs(out.coeffs[0] - oracle))
            assert err <= 1e-9, (equation, seed, err)
    print("ACCEPTANCE 5: PASS - scheme matches the Taylor-series pipeline to 1e-9")


def test_06_operator_bound_suite():
    M = 128
    kappas = (1.0, 10.0, 100.0)
    ns = [2**e for e in range(8)] + [128]
    for equation in ("BO", "CCM-defocusing"):
        for seed in range(5):
            u0 = analyze_profile(rand_profile(seed), M, hardy=(equation != "BO"))
            reports = run_bound_suite(u0, equation, M, kappas, ns, n_vectors=200,
                                      seed=seed)
            failed = [(r.name, r.params) for r in reports if not r.passed]
            assert failed == [], (equation, seed, failed)
            for r in reports:
                if r.name == "projection" and r.params["n"] < M:
                    assert r.measured == 1.0 / (r.params["n"] + r.params["kappa"])
    print("ACCEPTANCE 6: PASS - all operator bounds hold for 5 profiles, both equations")


def test_07_resolvent_rate():
    M = 256
    for equation in ("BO", "CCM-defocusing"):
        u0 = analyze_profile(rand_profile(2), M, hardy=(equation != "BO"))
        rows = run_resolvent_convergence(u0, equation, M)
        assert rows, equation
        assert all(r.n <= M // 2 for r in rows)
        bad = [(r.n, r.measured, r.bound) for r in rows if not r.passed]
        assert bad == [], (equation, bad)
    print("ACCEPTANCE 7: PASS - resolvent differences within the 1/n rate bounds")


def test_08_convergence_study_square_wave():
    table = run_convergence_study(
        InitialProfile("square-wave"), "BO", Ks=(16, 32, 64, 128),
        schedule_kind="constant", T=math.pi, grid_points=41, K_ref=1024,
        check=False,
    )
    errs = [r.error for r in table.rows]
    assert all(b < a for a, b in zip(errs, errs[1:])), errs
    for r in table.rows:
        assert r.norm_diff <= r.error + 1e-12, (r.K, r.norm_diff, r.error)
    print("ACCEPTANCE 8: PASS - square-wave errors strictly decrease; "
          f"norm differences bounded by errors (errors: {errs})")


def test_09_rate_check_smooth_data():
    table = run_convergence_study(
        rand_profile(0, norm=0.5, s=2.0), "BO", Ks=(32, 64, 128, 256),
        schedule_kind="constant", T=1.0, grid_points=11, K_ref=1024,
        check=False,
    )
    slope = fit_rate(table)
    assert slope is not None
    assert -2.0 <= slope <= -0.7, slope
    print(f"ACCEPTANCE 9: PASS - fitted rate {slope:.3f} within [-2.0, -0.7]")


def test_10_talbot_reproduction(tmp_path):
    out = tmp_path / "talbot"
    rc = main(["talbot", "--out", str(out)])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["panels"] == 4
    for i in range(4):
        assert (out / f"talbot_{i}_nonlinear.csv").exists()
        assert (out / f"talbot_{i}_linear.csv").exists()

    # linear coefficients must carry the exact free-flow phases
    K = 1 << 10
    times = [parse_time_expr(e) for e in ("pi/2", "pi/3", "pi/6", "sqrt2*pi")]
    lines = (out / "coefficients_linear.csv").read_text().splitlines()[1:]
    coeffs = np.zeros((4, K), dtype=np.complex128)
    for row in lines:
        t, k, re, im = row.split(",")
        i = times.index(min(times, key=lambda v: abs(v - float(t))))
        coeffs[i, int(k)] = float(re) + 1j * float(im)
    u0 = np.array([square_wave_coefficient(k) for k in range(K)])
    ks = np.arange(K)
    for i, t in enumerate(times):
        expect = np.exp(1j * t * ks**2) * u0
        assert np.max(np.abs(coeffs[i] - expect)) <= 1e-10, t

    # the nonlinear/linear profile difference is visible at desk scale at pi/2
    def samples(name):
        rows = (out / name).read_text().splitlines()[1:]
        return np.array([float(r.split(",")[1]) for r in rows])

    gap = np.max(np.abs(samples("talbot_0_nonlinear.csv") - samples("talbot_0_linear.csv")))
    assert gap > 1e-2, gap
    print(f"ACCEPTANCE 10: PASS - 4 Talbot panels, exact linear phases, "
          f"nonlinear-linear gap {gap:.3e} at t = pi/2")


def test_11_cost_model():
    K = 8
    values = [8, 8, 4, 4, 2, 2, 1, 1]  # d = 4 distinct truncation parameters
    sched = make_schedule("custom", K, custom_values=values)
    u0 = rand_profile(3)
    one = run_scheme(SchemeConfig("BO", sched, np.array([1.0]), u0))
    assert one.decompositions == 4, one.decompositions
    many = run_scheme(SchemeConfig("BO", sched, np.linspace(-5, 5, 10), u0))
    assert many.decompositions == 4, many.decompositions
    # 10x more times on a shared cache costs zero additional decompositions
    more = run_scheme(SchemeConfig("BO", sched, np.linspace(-5, 5, 100), u0),
                      cache=many.cache)
    assert more.decompositions == 0, more.decompositions
    print("ACCEPTANCE 11: PASS - d distinct truncations cost d decompositions; "
          "extra time points cost none")
