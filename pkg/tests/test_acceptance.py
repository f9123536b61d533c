"""Acceptance criteria, one test per criterion.

Each test prints and records a single PASS/FAIL line; the lines are
repeated in the terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

import oracles
from unimodal import analysis as an
from unimodal import cascade as c
from unimodal import cli
from unimodal import geometry as g
from unimodal import maps
from unimodal import telemann as tm
from unimodal.errors import DegenerateConfiguration, NoFixedPoint

CAPS200 = c.Caps(return_time=200)


def report(log, n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    log.append(line)
    assert ok, line


def timed_cli(capsys, argv):
    start = time.perf_counter()
    code = cli.run(argv)
    elapsed = time.perf_counter() - start
    out, err = capsys.readouterr()
    assert code == 0, err
    return json.loads(out), elapsed


@pytest.fixture(scope="module")
def t_feigenbaum():
    return oracles.feigenbaum_parameter()[0]


@pytest.fixture(scope="module")
def second_parameter():
    """First M_candidate on 0.955, 0.960, ... whose cascade is recurrent with depth >= 3."""
    for t in np.round(np.arange(0.955, 1.0, 0.005), 3):
        m = maps.quadratic(float(t))
        out = an.classify(m)
        cas = out.cascade
        if (out.label is an.LabelKind.M_CANDIDATE and cas is not None
                and cas.termination is not c.Termination.NON_RECURRENT and cas.depth >= 3):
            return float(t)
    pytest.fail("no recurrent M_candidate parameter on the grid")


def test_criterion_01_exact_summability(acceptance_log, capsys):
    d, elapsed = timed_cli(capsys, ["summability", "--t", "1", "--alpha", "2", "--kmax", "30",
                                    "--format", "json"])
    # chain rule on the orbit 1, -1, -1, ...: |Df^k(f(0))| = 4 * 4^(k-1)
    want = math.fsum(1.0 / math.sqrt(4.0 ** k) for k in range(1, 31))
    err = abs(d["partial_sums"][29] - want)
    report(acceptance_log, 1, err <= 1e-9 and elapsed < 1.0,
           f"S_30 error {err:.1e}, {elapsed:.3f} s")


def test_criterion_02_lyapunov_chebyshev(acceptance_log, capsys):
    d, elapsed = timed_cli(capsys, ["lyapunov", "--t", "1", "--x0", "0.3", "--iters", "1000000"])
    err = abs(d["lyapunov"] - math.log(2.0))
    report(acceptance_log, 2, err <= 1e-3 and elapsed < 1.0,
           f"lambda {d['lyapunov']:.6f}, |lambda - ln 2| {err:.1e}, {elapsed:.3f} s")


def test_criterion_03_arcsine_density(acceptance_log):
    start = time.perf_counter()
    dens = an.invariant_density(maps.quadratic(1.0), 10 ** 7, 200)
    elapsed = time.perf_counter() - start
    l1 = float(np.abs(dens.masses - oracles.arcsine_masses(dens.edges)).sum())
    report(acceptance_log, 3, l1 < 0.02 and elapsed < 30.0, f"L1 {l1:.5f}, {elapsed:.2f} s")


def test_criterion_04_fixed_points(acceptance_log):
    errs = [abs(maps.fixed_point_positive(maps.quadratic(t)) - (1 - 1 / (2 * t)))
            for t in (0.6, 0.75, 1.0)]
    try:
        maps.fixed_point_positive(maps.quadratic(0.4))
        raised = False
    except NoFixedPoint:
        raised = True
    report(acceptance_log, 4, max(errs) <= 1e-12 and raised,
           f"max error {max(errs):.1e}, NoFixedPoint at 0.4: {raised}")


def test_criterion_05_classifier(acceptance_log, t_feigenbaum):
    a = an.classify(maps.quadratic(0.5))
    b = an.classify(maps.quadratic(0.6))
    one = an.classify(maps.quadratic(1.0))
    feig = an.classify(maps.quadratic(t_feigenbaum))
    ok = (a.label is an.LabelKind.P and a.multiplier == 0.0
          and b.label is an.LabelKind.P and abs(b.multiplier + 0.4) <= 1e-12
          and one.label is an.LabelKind.M_CANDIDATE
          and feig.label is an.LabelKind.R)
    report(acceptance_log, 5, ok,
           f"0.5 {a.label.value}({a.multiplier}), 0.6 {b.label.value}({b.multiplier:.12f}), "
           f"1 {one.label.value}, t_F={t_feigenbaum:.10f} {feig.label.value}")


def test_criterion_06_chain_rule(acceptance_log):
    m = maps.quadratic(0.95)
    cas = c.build_cascade(m)
    table = tm.VisitTable(m, cas, 500)
    visits = oracles.visit_table(0.95, cas.u, 500)
    worst, mismatched = 0.0, 0
    for k in range(1, 501):
        dec = tm.decompose_with(table, k, 2)
        mm, ks, r, ss = oracles.telemann_indices(visits, k, 2)
        if not (dec.degenerate if mm is None else
                (dec.m, list(dec.k_list), dec.r, list(dec.s_list)) == (mm, ks, r, ss)):
            mismatched += 1
        worst = max(worst, tm.chain_rule_residual(m, dec))
    report(acceptance_log, 6, worst < 1e-8 and mismatched == 0,
           f"max residual {worst:.1e}, index mismatches {mismatched}")


def test_criterion_07_injectivity(acceptance_log, second_parameter):
    results = {}
    for t in (0.95, second_parameter):
        m = maps.quadratic(t)
        rep = tm.signature_injectivity(m, c.build_cascade(m), 2000)
        results[t] = len(rep.collisions)
    report(acceptance_log, 7, all(v == 0 for v in results.values()),
           "collisions " + ", ".join(f"t={t}: {v}" for t, v in results.items()))


def test_criterion_08_expansion(acceptance_log):
    counts = {}
    bad = 0
    for t in (0.7, 0.9, 0.95, 1.0):
        m = maps.quadratic(t)
        configs = g.random_monotone_configurations(m, 1000, seed=int(t * 1000))
        for n, inner, outer in configs:
            rep = g.expansion_check(m, n, inner, outer)
            bad += rep.hyp_after < rep.hyp_before - 1e-10
        counts[t] = len(configs)
    report(acceptance_log, 8, bad == 0 and min(counts.values()) == 1000,
           f"{sum(counts.values())} configurations over {len(counts)} parameters, {bad} decreases")


def test_criterion_09_koebe(acceptance_log):
    m = maps.quadratic(0.95)
    cas = c.build_cascade(m)
    checked, worst, skipped = 0, 0.0, 0
    for u in cas.u:
        for br in c.return_branches(m, u, CAPS200).branches:
            if br.return_time < 2:
                continue
            try:
                ext = c.branch_extension(m, br)
            except DegenerateConfiguration:
                skipped += 1
                continue
            if not ext.space > 0:
                skipped += 1
                continue
            left = m.f(0.0) if br.kind is c.BranchKind.CENTRAL else m.f(br.interval.lo)
            inner = g.Interval.hull(left, m.f(br.interval.hi))
            d = g.measured_distortion(m, br.return_time - 1, inner)
            worst = max(worst, d / g.koebe_bound(ext.space))
            checked += 1
    report(acceptance_log, 9, worst <= 1.0 and checked > 1000,
           f"{checked} branches, worst distortion / bound {worst:.3f}, {skipped} without space")


def test_criterion_10_prop31(acceptance_log):
    m = maps.quadratic(0.95)
    cas = c.build_cascade(m)
    a = an.prop31_audit(m, cas, n=3, samples=1000, seed=0)
    b = an.prop31_audit(m, cas, n=3, samples=1000, seed=1)
    spread = abs(a.ln_inv_theta - b.ln_inv_theta) / max(a.ln_inv_theta, b.ln_inv_theta)
    ok = (a.min_nondecreasing(2) and b.min_nondecreasing(2)
          and a.ln_inv_theta > 0 and b.ln_inv_theta > 0 and spread <= 0.2)
    report(acceptance_log, 10, ok,
           f"ln(1/theta) {a.ln_inv_theta:.3f} / {b.ln_inv_theta:.3f}, spread {spread:.1%}")


def _structure_ok(t):
    m = maps.quadratic(t)
    cas = c.build_cascade(m)
    nested = all(b < a for a, b in zip(cas.u, cas.u[1:]))
    disjoint = all(c.branches_disjoint(c.return_branches(m, u, CAPS200)) for u in cas.u)
    folding = True
    for n, q in enumerate(cas.q):
        x = oracles.exact_orbit(t, cas.u[n + 1], q)[-1]
        folding &= abs(abs(x) - cas.u[n]) <= 1e-10
    nice = all(c.certify_nice(m, cas))
    return nested and disjoint and folding and nice, cas.depth


def test_criterion_11_structure(acceptance_log, t_feigenbaum, second_parameter):
    params = [0.5, 0.6, 1.0, t_feigenbaum, 0.95, second_parameter]
    results = {}
    for t in params:
        m = maps.quadratic(t)
        try:
            c.build_cascade(m)
        except Exception:
            continue  # no cascade for this parameter (e.g. no positive fixed point)
        results[round(t, 6)] = _structure_ok(t)
    ok = all(v[0] for v in results.values()) and len(results) >= 4
    report(acceptance_log, 11, ok,
           "; ".join(f"t={t}: depth {d} {'ok' if v else 'FAILED'}" for t, (v, d) in results.items()))


def test_criterion_12_determinism(acceptance_log, tmp_path):
    outs = []
    for jobs in ("1", "8"):
        path = tmp_path / f"sweep{jobs}.csv"
        assert cli.run(["sweep", "--t-min", "0.55", "--t-max", "1.0", "--grid", "10",
                        "--jobs", jobs, "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    rows = outs[0].decode().strip().splitlines()
    report(acceptance_log, 12, outs[0] == outs[1] and len(rows) == 11,
           f"{len(rows) - 1} rows, identical: {outs[0] == outs[1]}")
