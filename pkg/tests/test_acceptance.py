"""Acceptance criteria 1-10, each at its stated tolerance and time limit.

Every test prints one line ``criterion N: PASS|FAIL ...`` to the terminal.
"""

import math
import time

import numpy as np
import pytest

from oscilla import audit as au
from oscilla import cli
from oscilla import powersum as pw
from oscilla import psi as ps
from oscilla import smoothed as sm
from oscilla import zeros as zm

from conftest import brute_psi_prefix


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {n}: {detail}"

    return emit


def test_criterion_01_psi_oracle(report):
    t0 = time.perf_counter()
    n = 10**5
    brute = np.array(brute_psi_prefix(n)[1:])
    xs = np.arange(1, n + 1, dtype=np.float64)
    got = ps.build_psi(n, threads=1).psi(xs)
    rel = np.abs(got[1:] - brute[1:]) / brute[1:]
    worst = float(rel.max())
    elapsed = time.perf_counter() - t0
    ok = got[0] == 0.0 == brute[0] and worst <= 1e-12 and elapsed < 60
    report(1, ok, f"max rel err {worst:.3g} over x <= 1e5, {elapsed:.1f}s")


def test_criterion_02_mellin_grid(report):
    t0 = time.perf_counter()
    worst = 0.0
    for k in (0.03, 0.1, 0.5, 1.0):
        for mu in (0.0, 5.0, 10.0):
            for ly in (mu - 3 * math.sqrt(k), mu, mu + 3 * math.sqrt(k)):
                worst = max(worst, sm.kernel_mellin_check(math.exp(ly), k, mu).abs_diff)
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-8 and elapsed < 10, f"max diff {worst:.3g} on 36 grid points, {elapsed:.2f}s")


def test_criterion_03_powersum_bound(report):
    t0 = time.perf_counter()
    rows = pw.verify_sweep(10_000, seed=0, n_max=8, m_max=32)
    worst = min(r["ratio"] for r in rows)
    fixed = []
    for pts, best, bound in (([1], 1.0, 0.091970), ([1, -1], 2.0, 0.008458), ([1, 1j, -1, -1j], 4.0, 7.154e-5)):
        r = pw.normalized_max(pw.PowerSumInstance(pts))
        fixed.append(r.satisfied and abs(r.normalized_max - best) < 1e-12 and abs(r.bound - bound) <= 5e-4 * bound)
    elapsed = time.perf_counter() - t0
    ok = len(rows) == 10_000 and worst >= 1 - 1e-9 and all(fixed) and elapsed < 30
    report(3, ok, f"min ratio {worst:.4g} over 10^4 instances, fixed examples {fixed}, {elapsed:.1f}s")


def test_criterion_04_explicit_formula_desk(report, bundled):
    t0 = time.perf_counter()
    p = sm.SmoothingParams.build(1e4, 0.5, 0.5, 14.134725)
    table = ps.build_psi(10**6, threads=1)
    uz = sm.u_from_zeros(bundled, p)
    ud = sm.u_from_delta(table, p)
    diff = abs(uz.value - ud.value)
    tol = 0.05 + uz.error_budget + ud.error_budget
    elapsed = time.perf_counter() - t0
    ok = abs(p.k - 0.05756) < 1e-5 and diff <= tol and elapsed < 300
    report(4, ok, f"|U_zeros - U_delta| = {diff:.3g} <= {tol:.3g}, {elapsed:.1f}s")


def test_criterion_05_matched_synthetic(report):
    t0 = time.perf_counter()
    p = sm.SmoothingParams.build(1e4, 0.5, 0.5, 14.134725)
    zs = zm.ZeroSet.from_zeros([zm.ZetaZero(0.5, 14.134725, zm.Source.SYNTHETIC)], 100.0)
    uz = sm.u_from_zeros(zs, p)
    ud = sm.u_from_delta(sm.ZeroInducedDelta(zs.zeros), p)
    diff = abs(uz.value - ud.value)
    elapsed = time.perf_counter() - t0
    ok = diff <= 1e-3 and diff <= uz.error_budget + ud.error_budget and elapsed < 30
    report(5, ok, f"|U_zeros - U_delta| = {diff:.3g} (tol 1e-3), {elapsed:.2f}s")


def test_criterion_06_partition(report):
    t0 = time.perf_counter()
    p = sm.SmoothingParams.build(1e4, 0.25, 0.75, 1000.0)
    e16, lg = 0.25 / 16, math.log(1000.0)
    rng = np.random.default_rng(6)
    # boundary cases with their classes under the tie rules
    ties = [(0.6, 1000 + e16, 2), (0.6, 1000 - e16, 2), (0.75 - e16, 1000.0, 4),
            (math.nextafter(0.75 - e16, 0), 1000.0, 3), (0.5, 1000 + lg, 2), (0.5, 1000 - lg, 2)]
    failures = 0
    for _ in range(100):
        n = int(rng.integers(0, 40))
        pts = list(zip(rng.uniform(0.01, 0.99, n), rng.uniform(985, 1015, n)))
        pts += [(s, g) for s, g, _ in ties]
        zs = zm.ZeroSet.from_zeros([zm.ZetaZero(float(s), float(g)) for s, g in pts], 1100.0)
        cls = sm.classify_zeros(zs, p).classes()
        members = [z for c in cls.values() for z in c]
        exhaustive = sorted((z.gamma, z.sigma) for z in members) == sorted((z.gamma, z.sigma) for z in zs)
        disjoint = len({id(z) for z in members}) == len(members) == len(zs)
        placed = all(any(z.sigma == s and z.gamma == g for z in cls[c]) for s, g, c in ties)
        failures += not (exhaustive and disjoint and placed)
    elapsed = time.perf_counter() - t0
    report(6, failures == 0 and elapsed < 10, f"{failures} failing sets of 100, {elapsed:.2f}s")


def test_criterion_07_exposed_dichotomy(report):
    t0 = time.perf_counter()
    base = "backbone 1.0 130 0.7\n"
    exposed_set = zm.synth_zeroset(base + "plant 0.6 50\nplant 0.7 52\n")
    r1 = zm.find_exposed(zm.ZetaZero(0.6, 50, zm.Source.SYNTHETIC), exposed_set, enforce_hypotheses=False)
    ok1 = r1.zero is not None and zm.is_exposed(r1.zero, exposed_set).exposed and r1.certificate.verify()
    stair = zm.synth_zeroset(base + "staircase 0.6 50 0.01 3 110\n")
    r2 = zm.find_exposed(zm.ZetaZero(0.6, 50, zm.Source.SYNTHETIC), stair, enforce_hypotheses=False)
    links = r2.certificate.links
    step = math.log(100)
    ok2 = (
        r2.zero is None
        and r2.certificate.conclusion is zm.Conclusion.DENSITY_VIOLATION
        and all(b.sigma >= a.sigma and abs(b.gamma - a.gamma) <= step for a, b in zip(links, links[1:]))
        and links[-1].gamma >= 100
    )
    elapsed = time.perf_counter() - t0
    report(7, ok1 and ok2 and elapsed < 10, f"exposed branch {ok1}, certificate branch {ok2} ({len(links)} links), {elapsed:.2f}s")


def test_criterion_08_relaxation_chain(report):
    t0 = time.perf_counter()
    grid = au.relaxation_grid(50, 50)
    first = [(e, g) for e, g, c in grid if not c.factor_ge_45]
    second = [(e, g) for e, g, c in grid if not c.step_45_ge_final]
    bad = [(e, g) for e, g, c in grid if not c.holds]
    elapsed = time.perf_counter() - t0
    detail = (f"{len(bad)}/{len(grid)} grid points violate the chain "
              f"(first step {len(first)}, second step {len(second)})")
    if first:
        e, g = first[0]
        detail += f"; e.g. eps={e:.4g}, gamma0={g:.6g}"
    report(8, not bad and elapsed < 5, f"{detail}, {elapsed:.2f}s")


def test_criterion_09_hunt_recheck(report):
    t0 = time.perf_counter()
    table = ps.build_psi(10**6, threads=1)
    r = au.oscillation_hunt(au.OscillationClaim(1e4, 0.5, 0.5, 14.134725, 1e-3), table)
    elapsed = time.perf_counter() - t0
    ok = r.rel_err <= 1e-12 and elapsed < 120
    report(9, ok, f"x*={r.x_star:g} ({r.side}), scan {r.max_normalized:.17g}, recheck rel err {r.rel_err:.3g}, {elapsed:.2f}s")


RUNS = [
    ["delta-scan", "2", "1000", "0.5"],
    ["zeros", "region", "0.5", "500"],
    ["powersum", "sweep", "--count", "200", "--seed", "3"],
    ["powersum", "search", "--n", "3", "--restarts", "3", "--iterations", "8"],
    ["kernel-check"],
    ["u-zeros"],
    ["u-delta"],
    ["classify"],
    ["class-sums", "--mu-grid", "3"],
    ["audit"],
    ["hunt", "--c2", "0.001"],
    ["historical", "--x0", "1e30"],
]


def test_criterion_10_reproducible(report, tmp_path):
    mismatched = []
    count = 0
    for i, cmd in enumerate(RUNS):
        out = tmp_path / f"run{i}"
        assert cli.main(cmd + ["--threads", "1", "--out", str(out)]) == 0
        first = {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}
        for p in out.glob("*.csv"):
            p.unlink()
        assert cli.main(["rerun", str(out / "run_config.ini")]) == 0
        second = {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}
        count += len(first)
        if first != second or not first:
            mismatched.append(" ".join(cmd))
    report(10, not mismatched, f"{count} CSV files over {len(RUNS)} commands, mismatches: {mismatched or 'none'}")
