"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances."""
import math
import time

import mpmath
import numpy as np

from eqsrc import asympt
from eqsrc.asympt import asym_h, asym_p, asym_q, branch_sqrt, edge_log_normalizer, edge_point, edge_scaled
from eqsrc.cli import envelope_error
from eqsrc.equilibrium import build_equilibrium, density_psi, energy, solve_parameters
from eqsrc.field import FieldSpec
from eqsrc.jmap import boundary_inverse, gamma_height, in_domain_D, invert_I1, invert_I2, new_map
from eqsrc.numerics import bisect_vec, find_root
from eqsrc.oracle import (
    compute_moments,
    counting_measure_distance,
    exact_h,
    exact_p,
    exact_q,
    pairing,
    real_zeros,
    saddle_p_quadratic,
)

GAUSS = FieldSpec.quadratic(1.0)


def verdict(record, num, ok, detail):
    record(f"criterion {num}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def mp_value(res):
    return mpmath.mpf(res.mantissa.real) * mpmath.exp(res.log_scale)


def table(n):
    return compute_moments(GAUSS, n, n + 1, n + 1, 256)


def test_criterion_1_quadratic_closed_form(record):
    worst, slowest = 0.0, 0.0
    for t in (0.5, 1.0, 2.0):
        t0 = time.perf_counter()
        p = solve_parameters(FieldSpec.quadratic(t))
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, abs(p.c1 - t), abs(p.c0 - t / 2))
    verdict(record, 1, worst <= 1e-8 and slowest < 5.0,
            f"max |(c1,c0)-(t,t/2)| = {worst:.2e}, slowest solve {slowest:.2f} s")


def test_criterion_2_support_endpoints(record, quad_eq):
    with mpmath.workdps(40):
        r5 = mpmath.sqrt(5)
        a = (1 - r5) / 2 - mpmath.log((3 + r5) / 2)
        b = (1 + r5) / 2 - mpmath.log((3 - r5) / 2)
    err = max(abs(quad_eq.a - float(a)), abs(quad_eq.b - float(b)))
    verdict(record, 2, err <= 1e-10, f"a = {quad_eq.a:.10f}, b = {quad_eq.b:.10f}, error {err:.2e}")


def test_criterion_3_quartic_cubic(record):
    worst_c1, worst_c0 = 0.0, 0.0
    for u in (-1.0, 0.0, 1.0, 3.0):
        root = find_root(lambda c: c ** 3 + 12 * c ** 2 + 4 * u * c - 4, 1e-9, 10.0, tol=1e-15)
        p = solve_parameters(FieldSpec.quartic(u))
        worst_c1 = max(worst_c1, abs(p.c1 - root))
        worst_c0 = max(worst_c0, abs(p.c0))
    verdict(record, 3, worst_c1 <= 1e-8 and worst_c0 <= 1e-10,
            f"max |c1 - cubic root| = {worst_c1:.2e}, max |c0| = {worst_c0:.2e}")


def test_criterion_4_critical_u(record):
    t0 = time.perf_counter()
    psi0 = lambda u: build_equilibrium(FieldSpec.quartic(u), check_ell=False).psi(0.0)
    u_star = find_root(psi0, -2.0, -1.8, tol=1e-6)
    elapsed = time.perf_counter() - t0
    verdict(record, 4, abs(u_star + 1.925) <= 5e-3 and elapsed < 120,
            f"u* = {u_star:.5f} (|u* + 1.9250| = {abs(u_star + 1.925):.1e}), {elapsed:.1f} s")


def test_criterion_5_density_consistency(record, quad_eq, quartic0_eq):
    route_gap, mass_gap = 0.0, 0.0
    for eq in (quad_eq, quartic0_eq):
        xs = np.linspace(eq.a, eq.b, 52)[1:-1]
        r1 = np.array([density_psi(eq, x) for x in xs])
        route_gap = max(route_gap, float(np.max(np.abs(r1 - eq.psi(xs)))))
        # independent mass: Gauss-Chebyshev on the stored density
        m = 400
        theta = (np.arange(m) + 0.5) * math.pi / m
        x = eq.c0 + eq.b0 * np.cos(theta)
        mass = float(np.sum(eq.psi(x) * eq.b0 * np.sin(theta)) * math.pi / m)
        mass_gap = max(mass_gap, abs(mass - 1), abs(eq.total_mass - 1))
    xs = np.linspace(quad_eq.a, quad_eq.b, 52)[1:-1]
    closed = boundary_inverse(quad_eq.map, xs).imag / math.pi
    closed_gap = float(np.max(np.abs(closed - quad_eq.psi(xs))))
    ok = route_gap <= 1e-6 and mass_gap <= 1e-8 and closed_gap <= 1e-8
    verdict(record, 5, ok, f"routes {route_gap:.1e}, mass {mass_gap:.1e}, closed form {closed_gap:.1e}")


def test_criterion_6_variational(record, quad_eq, quartic0_eq):
    eq_res, margin = 0.0, math.inf
    for eq in (quad_eq, quartic0_eq):
        xin = np.linspace(eq.a, eq.b, 102)[1:-1]
        eq_res = max(eq_res, float(np.max(np.abs(eq.Phi(xin)))))
        w = eq.b - eq.a
        d = np.geomspace(0.02, 2.0, 10) * w
        xout = np.concatenate([eq.b + d, eq.a - d])
        margin = min(margin, float(-np.max(eq.Phi(xout))))
    verdict(record, 6, eq_res <= 1e-8 and margin >= 1e-4,
            f"equality residual {eq_res:.1e}, inequality margin {margin:.2e}")


def test_criterion_7_oracle_decay(record, quad_eq):
    t0 = time.perf_counter()
    ns = (10, 20, 40)
    mid = 0.5 * (quad_eq.a + quad_eq.b)
    errs = {key: [] for key in ("p outside", "p bulk", "q outside", "q bulk")}
    for n in ns:
        tab = table(n)
        p, q = exact_p(tab, n), exact_q(tab, n)
        for fam, poly, f in (("p", p, asym_p), ("q", q, asym_q)):
            exact5 = poly.eval_mp(5.0)
            errs[f"{fam} outside"].append(float(abs(mp_value(f(quad_eq, n, 0, 5.0)) / exact5 - 1)))
            errs[f"{fam} bulk"].append(envelope_error(quad_eq, fam, n, 0, mid, poly.eval_mp(mid)))
    ratios = {k: [v[i + 1] / v[i] for i in range(len(v) - 1)] for k, v in errs.items()}
    elapsed = time.perf_counter() - t0
    ok = all(0.25 <= r <= 1.0 for rs in ratios.values() for r in rs) and elapsed < 600
    detail = "; ".join(f"{k} ratios " + "/".join(f"{r:.3f}" for r in rs) for k, rs in ratios.items())
    verdict(record, 7, ok, f"{detail}; {elapsed:.1f} s")


def test_criterion_8_norming_constants(record, quad_eq):
    ns = (10, 20, 40)
    scaled = {}
    for k in (-1, 0, 1):
        vals = []
        for n in ns:
            tab = table(n)
            j = n + k
            h_exact = exact_h(tab, exact_p(tab, j), exact_q(tab, j))
            vals.append(n * float(abs(mp_value(asym_h(quad_eq, n, k)) / h_exact - 1)))
        scaled[k] = vals
    # C fitted as the largest n|ratio - 1|; stable means every n stays within a factor 2 of it
    ok = all(max(v) <= 2 * min(v) for v in scaled.values())
    detail = "; ".join(f"k={k}: n|ratio-1| = " + "/".join(f"{x:.3f}" for x in v) for k, v in scaled.items())
    verdict(record, 8, ok, detail)


def test_criterion_9_saddle_cross_check(record, quad_eq):
    n = 20
    mid = 0.5 * (quad_eq.a + quad_eq.b)
    tab = table(40)
    p20, p40 = exact_p(table(n), n), exact_p(tab, 40)
    zeros = real_zeros(p20, quad_eq.a, quad_eq.b)
    cands = [mid + dx for dx in np.linspace(-0.1, 0.1, 9)]
    xb = max(cands, key=lambda v: min(abs(v - z) for z in zeros))

    def disc(x, poly, nn, mode):
        return abs(saddle_p_quadratic(x, nn, mode) / float(poly.eval_mp(x)) - 1)

    out20, bulk20 = disc(5.0, p20, 20, "limit_phase"), disc(xb, p20, 20, "limit_phase")
    out40, bulk40 = disc(5.0, p40, 40, "limit_phase"), disc(xb, p40, 40, "limit_phase")
    full = max(disc(5.0, p20, 20, "full_sum"), disc(xb, p20, 20, "full_sum"))
    halves = all(0.25 <= r <= 1.0 for r in (out40 / out20, bulk40 / bulk20))
    ok = out20 <= 5e-3 and bulk20 <= 2e-2 and halves and full <= 5e-3
    verdict(record, 9, ok, f"x=5: {out20:.2e} -> {out40:.2e}; x={xb:.3f}: {bulk20:.2e} -> {bulk40:.2e}; "
                           f"full_sum {full:.1e}")


def test_criterion_10_edge_airy(record, quad_eq):
    n = 40
    p = exact_p(table(n), n)
    errs = []
    for t in (-1.0, 0.0, 1.0):
        z = edge_point(quad_eq, n, t, "b")
        lhs = mpmath.exp(edge_log_normalizer(quad_eq, n, z, "p")) * p.eval_mp(z)
        rhs = edge_scaled(quad_eq, n, 0, t, "b", "p")
        errs.append(float(abs(lhs / rhs - 1)))
    verdict(record, 10, max(errs) <= 0.15, "relative errors t=-1/0/1: " + "/".join(f"{e:.3f}" for e in errs))


def test_criterion_11_zero_convergence(record, quad_eq):
    dist = []
    for n in (10, 20, 30):
        p = exact_p(table(n), n)
        zeros = real_zeros(p, quad_eq.a - 0.2, quad_eq.b + 0.2)
        dist.append(counting_measure_distance(zeros, quad_eq))
    ok = dist[0] > dist[1] > dist[2] and dist[2] <= 0.08
    verdict(record, 11, ok, "Kolmogorov distances n=10/20/30: " + "/".join(f"{d:.4f}" for d in dist))


def _round_trip_error(rng):
    p = new_map(1.0, 0.5)
    worst = 0.0
    for _ in range(200):
        z = complex(rng.uniform(-6, 8), rng.uniform(-3, 3))
        if abs(z.imag) < 1e-3 or (p.a <= z.real <= p.b and abs(z.imag) < 1e-2):
            continue
        s1 = invert_I1(p, z)
        worst = max(worst, abs(p.J(s1) - z))
        s2 = invert_I2(p, z)
        worst = max(worst, abs(p.J(s2) - z))
        assert not in_domain_D(p, s1) and in_domain_D(p, s2)
    return worst


def test_criterion_12_property_suites(record, quad_eq):
    rng = np.random.default_rng(12)
    checks = {}
    checks["jmap round trips"] = _round_trip_error(rng) <= 1e-10

    p = quad_eq.map
    apex = complex(0.0, gamma_height(p, 0.0))
    e = 1e-7j
    jump = abs(branch_sqrt(p, apex + e, "gamma1") + branch_sqrt(p, apex - e, "gamma1"))
    cont = abs(branch_sqrt(p, apex.conjugate() + e, "gamma1") - branch_sqrt(p, apex.conjugate() - e, "gamma1"))
    checks["branch_sqrt jump/continuity"] = jump <= 1e-6 and cont <= 1e-6

    q1 = build_equilibrium(FieldSpec.quartic(1.0))
    xs = np.linspace(0, q1.b, 60)
    checks["quartic symmetry"] = float(np.max(np.abs(q1.psi(xs) - q1.psi(-xs)))) <= 1e-8

    n = 200
    targets = (np.arange(n) + 0.5) / n
    x = bisect_vec(lambda v: quad_eq.cdf(v) - targets, np.full(n, quad_eq.a), np.full(n, quad_eq.b))
    e0 = energy(GAUSS, [(v, 1 / n) for v in x])
    beats = 0
    for _ in range(20):
        y = np.clip(np.sort(x + rng.normal(0, 0.05, n)), quad_eq.a, quad_eq.b) + np.arange(n) * 1e-9
        beats += energy(GAUSS, [(v, 1 / n) for v in y]) > e0
    checks["energy minimizer"] = beats == 20

    tab = compute_moments(GAUSS, 5, 5, 5, 256)
    ps = [exact_p(tab, j) for j in range(6)]
    qs = [exact_q(tab, k) for k in range(6)]
    scale = max(abs(v) for row in tab.m for v in row)
    off = max(abs(pairing(tab, ps[j], qs[k])) for j in range(6) for k in range(6) if j != k) / scale
    checks["biorthogonality"] = off <= mpmath.mpf(10) ** -50

    failed = [k for k, v in checks.items() if not v]
    verdict(record, 12, not failed, "all property subsets hold" if not failed else f"failed: {failed}")
