"""Acceptance suite: one test per criterion, printing a PASS/FAIL line each.

The ensemble fixtures (certified seeds, doubling scans, nodal and lift
measurements) are session-scoped and shared across criteria 3, 4, 7, 8, 10.
Criterion 3's cross-ensemble stability clause is asserted exactly as stated
and is expected to fail on measured flat-torus physics; the analysis lives in
the verification notes outside the package.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from nodalscope.certify import (
    default_k1,
    default_k2,
    lambda_threshold,
    report_to_json,
)
from nodalscope.doubling import lower_bound_check, q_growth_ratio
from nodalscope.fields import MassEvaluator, l2_on_ball
from nodalscope.geometry import generate_cover
from nodalscope.harness import (
    collect_certified_members,
    member_doubling,
    member_lift_index,
    member_nodal_stats,
    run_family_report,
    gradient_amplitude_ratio,
)
from nodalscope.lift import harmonicity_residual
from nodalscope.nodal import extract_nodal, find_singular_points
from nodalscope.spectrum import mode_spec

ENSEMBLE_MS = (25, 100, 325, 1105)


def _report(number: int, ok: bool, detail: str) -> None:
    # tee-sys capture (set in pyproject) passes these through to the console
    print(f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.fixture(scope="session")
def ensembles(t2):
    t0 = time.time()
    members_by_m = {}
    pass_fractions = {}
    for m in ENSEMBLE_MS:
        members, pf = collect_certified_members(m, t2, count=8)
        for mb in members:
            member_doubling(mb)
        members_by_m[m] = members
        pass_fractions[m] = pf
    return {
        "members": members_by_m,
        "pass_fractions": pass_fractions,
        "build_seconds": time.time() - t0,
    }


@pytest.fixture(scope="session")
def ensembles_nodal(ensembles):
    for members in ensembles["members"].values():
        for mb in members:
            member_nodal_stats(mb)
    return ensembles


@pytest.fixture(scope="session")
def ensembles_lift(ensembles):
    for members in ensembles["members"].values():
        for mb in members[:2]:
            member_lift_index(mb, scan_budget=150)
    return ensembles


def test_criterion_1_sin_nodal_lengths(t2):
    t0 = time.time()
    ok = True
    details = []
    for k in (1, 2, 4, 8, 16):
        spec = mode_spec([((k, 0), 0.0, math.sqrt(2))], t2)
        ns = extract_nodal(spec, 1024)
        rel = abs(ns.length - 2.0 * k) / (2.0 * k)
        ratio = ns.length / math.sqrt(spec.lam)
        ratio_rel = abs(ratio - 1.0 / math.pi) * math.pi
        details.append(f"k={k}: H1={ns.length:.6f} ({rel:.2e}), "
                       f"len/sqrt(lam)={ratio:.5f}")
        ok &= rel < 1e-3 and ratio_rel < 0.01
    elapsed = time.time() - t0
    ok &= elapsed < 30.0
    _report(1, ok, f"{'; '.join(details)}; runtime {elapsed:.1f}s")
    assert ok


def test_criterion_2_product_singular_points(product_spec):
    points = find_singular_points(product_spec, 512)
    expected = {(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)}
    located = {
        (round(float(p.location[0]), 6) % 1.0,
         round(float(p.location[1]), 6) % 1.0)
        for p in points
    }
    orders_ok = all(p.vanishing_order == 2 for p in points)
    residuals_ok = all(p.residual < 1e-8 for p in points)
    # slope 4.0 +- 0.1 on the log-log fit at each point
    from nodalscope.nodal import _sup_small_ball

    slopes = []
    for p in points:
        dmax = min(0.05, 1.0 / (8.0 * math.sqrt(product_spec.m)))
        deltas = [dmax / 2**j for j in range(7)]
        sups = [_sup_small_ball(product_spec, p.location, d) for d in deltas]
        slopes.append(float(np.polyfit(np.log(deltas), np.log(sups), 1)[0]))
    slopes_ok = all(abs(s - 4.0) <= 0.1 for s in slopes)
    ok = (len(points) == 4 and located == expected and orders_ok
          and residuals_ok and slopes_ok)
    _report(2, ok, f"{len(points)} points at {sorted(located)}, "
                   f"slopes {[round(s, 3) for s in slopes]}, "
                   f"max residual {max(p.residual for p in points):.2e}")
    assert ok


def test_criterion_3_refined_doubling(ensembles):
    members = ensembles["members"]
    build_s = ensembles["build_seconds"]
    c_star = {}
    max_idx = {}
    for m, mlist in members.items():
        c_star[m] = max(mb.c_star for mb in mlist)
        max_idx[m] = max(
            max(rec.index_sup for rec in mb.records) for mb in mlist
        )
    # (ii) every scanned record obeys N <= c*_m r sqrt(lambda)
    by_construction = True
    for m, mlist in members.items():
        for mb in mlist:
            bound = c_star[m] * mb.r * math.sqrt(mb.spec.lam)
            by_construction &= all(
                rec.index_sup <= bound + 1e-12 for rec in mb.records
            )
    # (iii) frozen m=25 prediction vs m=1105 measurements
    r_1105 = members[1105][0].r
    lam_1105 = members[1105][0].spec.lam
    prediction = c_star[25] * r_1105 * math.sqrt(lam_1105)
    bounds_measurements = max_idx[1105] <= prediction
    prediction_factor = prediction / max_idx[1105]
    # (i) cross-ensemble stability
    spread = max(c_star.values()) / min(c_star.values())
    runtime_ok = build_s < 600.0

    detail = (
        f"c*={{{', '.join(f'{m}: {c_star[m]:.4f}' for m in sorted(c_star))}}} "
        f"spread {spread:.2f}x; max indices "
        f"{{{', '.join(f'{m}: {max_idx[m]:.3f}' for m in sorted(max_idx))}}}; "
        f"frozen-25 prediction {prediction:.2f} vs measured "
        f"{max_idx[1105]:.3f} (factor {prediction_factor:.2f}); "
        f"build {build_s:.0f}s"
    )
    clause_i = spread <= 2.0
    clause_iii_tight = prediction_factor <= 2.0
    ok = (clause_i and by_construction and bounds_measurements
          and clause_iii_tight and runtime_ok)
    _report(3, ok, detail)
    assert by_construction, "per-record bound must hold by construction"
    assert bounds_measurements, "frozen-25 prediction must bound m=1105"
    assert runtime_ok, f"ensemble build took {build_s:.0f}s >= 600s"
    if not (clause_i and clause_iii_tight):
        pytest.fail(
            "criterion 3 stability clause failed as measured: c* spread "
            f"{spread:.2f}x > 2 (values {c_star}), prediction factor "
            f"{prediction_factor:.2f} > 2. Certified flat-torus "
            "eigenfunctions have m-independent max doubling indices "
            "(saturating near log 4 at simple zeros), while certification "
            "at the default thresholds pins r at 1/4 for every m, so "
            "c* = N_max/(r sqrt(lambda)) scales like 1/sqrt(lambda). "
            "See the decisions ledger for the full blocking analysis."
        )


def test_criterion_4_lower_bounds(ensembles):
    rng = np.random.default_rng(2024)
    ok = True
    worst = []
    for m, mlist in ensembles["members"].items():
        c = 1.5 * max(mb.c_star for mb in mlist)
        passed = 0
        for i in range(100):
            mb = mlist[i % len(mlist)]
            x = rng.random(2)
            delta = 10 ** rng.uniform(
                math.log10(mb.r / 64), math.log10(mb.r / 2.01)
            )
            if lower_bound_check(mb.spec, x, delta, mb.r, c, tol=1e-2):
                passed += 1
        worst.append(f"m={m}: {passed}/100")
        ok &= passed == 100
    _report(4, ok, "; ".join(worst))
    assert ok


def test_criterion_5_certificate_soundness(t2, sin1):
    # constant unit field through the grid quadrature: mass/rho^2 = pi
    def const(points):
        return np.ones(len(points))

    k1, k2 = default_k1(t2), default_k2(t2)
    r = 0.2
    ratios = []
    for center in [(0.1, 0.3), (0.55, 0.7), (0.9, 0.05)]:
        for rho in (r / 2, 2 * r):
            mass = l2_on_ball(None, center, rho, tol=1e-6, field=const)
            ratios.append(mass / rho**2)
    const_ok = all(abs(x - math.pi) <= 1e-6 * math.pi for x in ratios)
    certifies = all(k1 <= x <= k2 for x in ratios)

    # single sin mode fails at every admissible grid radius
    from nodalscope.certify import certify_equidistribution

    lam_scale = sin1.lam ** -0.5
    sin_fails = True
    min_ratios = {}
    for r_try in (0.25, 0.2, 0.17):
        if r_try < lam_scale:
            continue
        cert = certify_equidistribution(sin1, r_try)
        sin_fails &= not cert.passed
        min_ratios[r_try] = cert.min_ratio
    # quadrature oracle for the worst (nodal-line) center at r = 0.25
    rho = 0.125

    def strip(x):
        return 2 * math.sin(2 * math.pi * x) ** 2 * 2 * math.sqrt(
            max(rho**2 - x**2, 0.0)
        )

    oracle, _ = quad(strip, -rho, rho, limit=200)
    oracle_ratio = oracle / rho**2
    oracle_ok = abs(min_ratios[0.25] - oracle_ratio) <= 1e-3
    ok = const_ok and certifies and sin_fails and oracle_ok
    _report(5, ok, f"constant ratios pi +- {max(abs(x - math.pi) for x in ratios):.2e}; "
                   f"sin min_ratio(0.25)={min_ratios[0.25]:.6f} vs oracle "
                   f"{oracle_ratio:.6f}")
    assert ok


def test_criterion_6_lambda_threshold(t2, sin_k):
    r = 0.25
    family = [sin_k(k) for k in range(1, 17)]
    J = lambda_threshold(family, r)

    # independent 1-D quadrature oracle through the same sandwich logic
    cover = generate_cover(r / 2, t2)
    xs = np.unique(cover.centers[:, 0])
    k1, k2 = default_k1(t2), default_k2(t2)

    def quad_mass(k, cx, rho):
        f = lambda x: 2 * math.sin(2 * math.pi * k * x) ** 2 * 2 * math.sqrt(
            max(rho**2 - (x - cx) ** 2, 0.0)
        )
        val, _ = quad(f, cx - rho, cx + rho, limit=200)
        return val

    J_oracle = None
    for idx, k in enumerate(range(1, 17)):
        lo = min(quad_mass(k, cx, r / 2) / (r / 2) ** 2 for cx in xs)
        hi = max(quad_mass(k, cx, 2 * r) / (2 * r) ** 2 for cx in xs)
        passing = k1 <= lo and hi <= k2
        if passing and J_oracle is None:
            J_oracle = idx
        elif not passing:
            J_oracle = None
    j_ok = J == J_oracle and J is not None

    # mean measured mass over certificate centers converges to pi r^2
    target = math.pi * r * r
    mean_devs = {}
    for idx in range(J, 16):
        spec = family[idx]
        masses = MassEvaluator(spec).mass_many(cover.centers, r)
        mean_devs[idx + 1] = abs(float(masses.mean()) - target) / target
    mass_ok = all(dev <= 0.05 for dev in mean_devs.values())
    ok = j_ok and mass_ok
    _report(6, ok, f"J={J} (k={J + 1}), oracle J={J_oracle}; worst mean-mass "
                   f"deviation {max(mean_devs.values()):.4f} "
                   f"(target {target:.5f})")
    assert ok


def test_criterion_7_harmonic_lift(ensembles_lift, rand100):
    rng = np.random.default_rng(7)
    ratios = []
    for _ in range(100):
        x = rng.random(2)
        t = rng.uniform(-0.2, 0.2)
        h = 1e-3
        r1 = harmonicity_residual(rand100, x, t, h)
        r2 = harmonicity_residual(rand100, x, t, h / 2)
        ratios.append(r1 / r2)
    conv_ok = all(abs(q - 4.0) <= 0.5 for q in ratios)

    c_prime = {}
    for m, mlist in ensembles_lift["members"].items():
        vals = []
        for mb in mlist[:2]:
            ci = mb.lift_index
            vals.append(ci.n_value / (ci.half_side * math.sqrt(mb.spec.lam)))
        c_prime[m] = max(vals)
    spread = max(c_prime.values()) / min(c_prime.values())
    lift_ok = spread <= 2.0
    ok = conv_ok and lift_ok
    _report(7, ok, f"residual ratios in [{min(ratios):.2f}, {max(ratios):.2f}]"
                   f"; c' = {{{', '.join(f'{m}: {c_prime[m]:.3f}' for m in sorted(c_prime))}}} "
                   f"spread {spread:.2f}x")
    assert ok


def test_criterion_8_q_chain(ensembles, sin1):
    members = ensembles["members"]
    # constants frozen at m=25: c* and the prefactor making the bound tight
    c25 = max(mb.c_star for mb in members[25])

    def samples_for(mb, n_centers=4):
        spec = mb.spec
        centers = generate_cover(min(mb.r, 0.25), spec.model).centers
        stride = max(1, len(centers) // n_centers)
        s = max(2.0 * spec.lam ** -0.5, mb.r / 16.0)
        scales = [s] if 4.0 * 2 * s > 0.5 else [s, 2 * s]
        return [
            q_growth_ratio(spec, c, sc, tol=1e-2)
            for c in centers[::stride][:n_centers] for sc in scales
        ]

    beta2 = 0.0
    for mb in members[25]:
        root = mb.r * math.sqrt(mb.spec.lam)
        for ratio in samples_for(mb):
            beta2 = max(beta2, ratio * math.exp(-3 * c25 * root) / 2)

    chain_ok = True
    worst_margin = math.inf
    for m, mlist in members.items():
        for mb in mlist[:4]:
            root = mb.r * math.sqrt(mb.spec.lam)
            bound = 2 * beta2 * math.exp(3 * c25 * root)
            for ratio in samples_for(mb):
                chain_ok &= ratio <= bound * (1 + 1e-9)
                worst_margin = min(worst_margin, bound / ratio)

    sx = {}
    for m, mlist in members.items():
        sx[m] = [gradient_amplitude_ratio(mb.spec) for mb in mlist]
    sx_all = [v for vals in sx.values() for v in vals]
    sx_ok = all(0.2 <= v <= 3.0 for v in sx_all)
    sx_sin = gradient_amplitude_ratio(sin1)
    sin_ok = abs(sx_sin - 1.0) < 1e-6

    ok = chain_ok and sx_ok and sin_ok
    _report(8, ok, f"beta'2={beta2:.3e} (frozen at m=25), worst bound margin "
                   f"{worst_margin:.2f}x; grad/amp ratio in "
                   f"[{min(sx_all):.3f}, {max(sx_all):.3f}], sin mode "
                   f"{sx_sin:.9f}")
    assert ok


def test_criterion_9_covering(t2, t3):
    ok = True
    details = []
    for model, n in ((t2, 2), (t3, 3)):
        c0 = (2 * math.sqrt(n)) ** n
        for j in range(2, 6):
            r = 2.0 ** -j
            cov = generate_cover(r, model)
            ok &= len(cov) <= c0 * r**-n + 1e-9
        m8 = generate_cover(0.125, model).overlap_bound
        m16 = generate_cover(0.0625, model).overlap_bound
        ok &= m8 == m16
        details.append(f"n={n}: multiplicity {m8} == {m16}")
    _report(9, ok, "; ".join(details))
    assert ok


def test_criterion_10_conditional_report(ensembles_nodal, ensembles_lift):
    members = ensembles_nodal["members"]
    reports = run_family_report(
        members, pass_fractions=ensembles_nodal["pass_fractions"]
    )
    # emission with full provenance for every certified member
    emitted_ok = len(reports) == sum(len(v) for v in members.values())
    provenance_ok = all(
        "calibrated at m=25" in rep.constants["c3"]["provenance"]
        and rep.constants["beta"]["provenance"] == "config"
        and rep.config_digest
        for rep in reports
    )
    serialized = [report_to_json(rep) for rep in reports]
    round_trip_ok = all('"schema_version": 1' in s for s in serialized)

    verdicts = {}
    for rep in reports:
        m = rep.meta["m"]
        if m == min(members):
            continue
        verdicts.setdefault(m, []).append(
            rep.verdicts.get("eq4_length_bound")
        )
    all_below = all(all(v) for v in verdicts.values())
    ok = emitted_ok and provenance_ok and round_trip_ok
    finding = "" if all_below else (
        " SCIENTIFIC FINDING: some measured lengths exceed the calibrated "
        f"curve: {verdicts}"
    )
    _report(10, ok and all_below,
            f"{len(reports)} reports emitted, c3 calibrated at m=25, "
            f"larger-lambda length verdicts: "
            f"{{{', '.join(f'{m}: {sum(bool(x) for x in v)}/{len(v)}' for m, v in sorted(verdicts.items()))}}}"
            + finding)
    assert ok, "reports must be emitted with full provenance"
    if not all_below:
        # reportable finding, not a build failure: the reports carry it
        print("criterion 10 finding recorded in the emitted reports")
