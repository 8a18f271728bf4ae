"""Acceptance criteria at their stated tolerances.

Every suite is run once through the CLI runner (timed per suite); the
criteria then inspect the recorded check details.  The last criterion
runs the full default command line in a subprocess and compares its
reports byte for byte with the first run.
"""

import io
import subprocess
import sys
import time
from pathlib import Path

import pytest

from boostcov import cli, config

SUITES = config.SUITE_NAMES
pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("accept")
    cfg = config.load()
    results, timings, status = {}, {}, {}
    for name in SUITES:
        t0 = time.perf_counter()
        code, res = cli.run({**cfg, "suites": [name]}, out, stream=io.StringIO())
        timings[name] = time.perf_counter() - t0
        results[name] = res[0]
        status[name] = code
    return {"out": out, "results": results, "timings": timings, "status": status, "cfg": cfg}


def checks(runs, suite, prefixes=None):
    res = runs["results"][suite]
    return [c for c in res.checks if prefixes is None or c.name.startswith(tuple(prefixes))]


def record(criteria, n, ok, line):
    criteria[n] = (bool(ok), line)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {line}")
    assert ok, line


def test_criterion_01_symbol_bounds(runs, criteria):
    cs = checks(runs, "symbols")
    cfg = runs["cfg"]["symbols"]
    combos = {(d, v) for d in cfg["dims"] for v in cfg["velocities"]}
    ok = (len(cs) == len(combos) == 18 and cfg["samples"] == 10_000
          and all(sum(c.details["violations"].values()) == 0 for c in cs))
    worst_sup = 0.0
    for c in cs:
        target = c.details["sinh_eta"]
        seq = [r for _, r in c.details["sup_sequence"]]
        if target > 0:
            worst_sup = max(worst_sup, abs(seq[-1] - target) / target)
            ok &= all(r < target for r in seq)
    ok &= worst_sup <= 0.01 and runs["timings"]["symbols"] < 10
    record(criteria, 1, ok, f"18 (d, v) cases x 1e4 samples, 0 violations, sup within {worst_sup:.1e} of sinh(eta), "
                            f"{runs['timings']['symbols']:.1f} s")


def test_criterion_02_kernel_duality(runs, criteria):
    cs = checks(runs, "kernels", ["duality"])
    worst = max(c.details["rel_err"] for c in cs)
    ok = (len(cs) == 3 and all(c.details["grid"] == [64, 64] for c in cs) and worst <= 1e-6
          and all(c.passed for c in checks(runs, "kernels")) and runs["timings"]["kernels"] < 30)
    record(criteria, 2, ok, f"3 velocities on 64x64, worst rel err {worst:.1e}, {runs['timings']['kernels']:.1f} s")


def test_criterion_03_reflection_positivity(runs, criteria):
    grams = checks(runs, "rp", ["gram"])
    iso = checks(runs, "rp", ["isometry"])
    cfg = runs["cfg"]["rp"]
    worst = min(c.details["min_eig"] / c.details["norm"] for c in grams)
    worst_iso = max(c.details["rel_dev"] for c in iso)
    ok = (cfg["members"] == 20 and len(cfg["seeds"]) == 5 and sorted(cfg["velocities"]) == [-0.6, 0.0, 0.6]
          and len(grams) == 30 and worst >= -1e-10 and worst_iso <= 1e-6 and len(iso) == 6)
    record(criteria, 3, ok, f"30 Gram matrices, min eig / norm {worst:.1e}; isometry rel dev {worst_iso:.1e}")


def test_criterion_04_periodization(runs, criteria):
    by = {c.name: c for c in checks(runs, "periodize")}
    tri = by["triple agreement"].details
    rho = by["bose factor bound"].details
    sweep = by["torus to cylinder"].details
    devs = sweep["deviations"]
    cfg = runs["cfg"]["periodize"]
    ok = (cfg["n_max"] == 64 and cfg["matsubara"] <= 10_000
          and max(tri["closed_vs_winding"], tri["closed_vs_matsubara"]) <= 1e-8
          and rho["exceptions"] == 0 and sweep["lengths"] == [4.0, 8.0, 16.0, 32.0]
          and all(a > b for a, b in zip(devs, devs[1:])))
    record(criteria, 4, ok, f"triple max dev {max(tri['closed_vs_winding'], tri['closed_vs_matsubara']):.1e}, "
                            f"rho exceptions {rho['exceptions']}, torus devs "
                            + " > ".join(f"{d:.1e}" for d in devs))


def test_criterion_05_thermal(runs, criteria):
    cs = checks(runs, "thermal")
    by_kind = {}
    for c in cs:
        by_kind.setdefault(c.name.split(" v=")[0], []).append(c)
    kms = max(c.details["max_residual"] for c in by_kind["one-particle kms"])
    polar = max(c.details["polar"] for c in by_kind["modular"])
    exact = all(c.details["j_kappa"] == 0.0 for c in by_kind["modular"])
    gap = all(c.details["min_abs"] >= c.details["gap"] for c in by_kind["liouvillian gap"])
    sv = min(c.details["min_singular_value"] for c in by_kind["two-slice density"])
    comm = max(c.details["residual"] for c in by_kind["commutator"])
    boundary = max(c.details["residual"] for c in by_kind["kms boundary"])
    ok = kms <= 1e-10 and exact and polar <= 1e-12 and gap and sv > 0 and comm <= 1e-12 and boundary <= 1e-10
    ok &= all(c.passed for c in cs)
    record(criteria, 5, ok, f"kms {kms:.1e}, j kappa exact, polar {polar:.1e}, gap ok, min sv {sv:.2f}, "
                            f"commutator {comm:.1e}, boundary {boundary:.1e}")


def test_criterion_06_gaussian(runs, criteria):
    by = {c.name: c for c in checks(runs, "gaussian")}
    s4, s6 = by["S4 law"].details["rel_dev"], by["S6 law"].details["rel_dev"]
    pr = by["pairing vs recursion"].details["rel_dev"]
    dual = max(by["double factorial law"].details["rel_devs"])
    fb = by["field vector bound"].details
    cfg = runs["cfg"]["gaussian"]
    ok = (max(s4, s6, pr) <= 1e-12 and dual <= 1e-10 and cfg["max_power"] >= 4
          and cfg["field_samples"] == 1000 and fb["max_ratio"] <= fb["bound"])
    record(criteria, 6, ok, f"S4/S6 {max(s4, s6):.1e}, pairing vs recursion {pr:.1e}, (2n-1)!! {dual:.1e}, "
                            f"field ratio {fb['max_ratio']:.3f} <= {fb['bound']:.4f}")


def test_criterion_07_spectrum_condition(runs, criteria):
    by = {c.name: c for c in checks(runs, "fock")}
    sc = by["spectrum condition K=3 N=6"].details
    rows = sc["rows"]
    cfg = runs["cfg"]["fock"]
    min_eig = min(r["min_eigenvalue"] for r in rows)
    ok = (cfg["coupling"] == 0.1 and cfg["mass"] == 1.0 and abs(cfg["length"] - 6.283185307179586) < 1e-15
          and sorted(r["v"] for r in rows) == [-0.6, -0.3, 0.0, 0.3, 0.6]
          and min_eig >= -1e-8 and all(r["ground_sector"] == 0 and r["ph_bound_ok"] for r in rows)
          and by["refinement trend"].passed and by["momentum conservation"].passed
          and runs["timings"]["fock"] < 180)
    trend = by["refinement trend"].details["trend"][-1]
    record(criteria, 7, ok, f"min spec {min_eig:.1e} in sector 0 for 5 velocities, (4,8) min "
                            f"{trend['min_eigenvalue']:.1e}, fock suite {runs['timings']['fock']:.1f} s")


def test_criterion_08_heat_kernel_gibbs(runs, criteria):
    by = {c.name: c for c in checks(runs, "fock")}
    z = by["free partition function"].details
    kms = by["gibbs kms"].details["kms_residual"]
    lem = by["trotter norm lemma"].details
    an = by["heat kernel analyticity"].details
    ok = (by["free partition function"].passed and z["cap_rel_error"] <= z["cap_budget"] and kms <= 1e-10
          and lem["trials"] == 1000 and lem["worst_ratio"] <= 1 and an["worst_normalized_root"] <= an["ratio_bound"]
          and by["heat kernel analyticity"].passed)
    record(criteria, 8, ok, f"Z cap error {z['cap_rel_error']:.1e} <= budget {z['cap_budget']:.1e}, kms {kms:.1e}, "
                            f"lemma worst {lem['worst_ratio']:.2f}, analyticity root {an['worst_normalized_root']:.2f}")


def test_criterion_09_feynman_kac(runs, criteria):
    fk = {c.name: c for c in checks(runs, "fock")}["gaussian feynman-kac"].details
    worst = max(fk["rel_devs"])
    ok = fk["times"] == [0.0, 0.5, 1.0] and worst <= 1e-8
    record(criteria, 9, ok, f"T in {{0, 0.5, 1}}, worst rel dev {worst:.1e}")


def test_criterion_10_full_cli(runs, criteria, tmp_path):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "boostcov", "--out", str(tmp_path)], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    first = Path(runs["out"])
    files = sorted(p.name for p in first.iterdir() if p.is_file() and p.name != "summary.json")
    same = all((first / f).read_bytes() == (tmp_path / f).read_bytes() for f in files)
    ok = proc.returncode == 0 and elapsed < 300 and same and len(files) > 7
    record(criteria, 10, ok, f"exit {proc.returncode} in {elapsed:.0f} s, {len(files)} report files "
                             f"{'byte-identical' if same else 'DIFFER'} across two runs")
