"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the
terminal summary under "acceptance criteria".
"""

import itertools
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from pframes import (
    NSpace,
    OptimizerConfig,
    PFrameFamily,
    functional_norm,
    functional_norm_estimate,
    is_p_frame,
    make_functional,
    n_norm,
    optimal_bounds,
)
from pframes import cli
from pframes.instance import load_instance
from pframes.runner import build, run_check, trial_instance
from pframes.theorems import THEOREM_IDS
from conftest import random_space, record

INSTANCES = Path(__file__).resolve().parent.parent / "instances"
SEED = 2024


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), np.finfo(float).tiny)


def generated(tid, count, seed=SEED):
    cfg = OptimizerConfig(seed=seed)
    for i in range(count):
        yield trial_instance(tid, seed, i, 5, cfg)


# --- 1 -------------------------------------------------------------------------


def test_01_nnorm_axioms():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    bad = {"i": 0, "ii": 0, "iii": 0, "iv": 0}
    for _ in range(500):
        d = int(rng.integers(3, 9))
        n = int(rng.integers(2, 4))
        S = NSpace.from_anchors(rng.standard_normal((n - 1, d)))
        X = rng.standard_normal((n, d))
        # (i) zero exactly on dependent tuples, positive on independent ones.
        Y = X.copy()
        Y[-1] = rng.standard_normal(n - 1) @ Y[:-1]
        if n_norm(S, *Y) > 1e-9 or not n_norm(S, *X) > 0:
            bad["i"] += 1
        # (ii) permutation invariance at 1e-12 relative.
        ref = n_norm(S, *X)
        for perm in itertools.permutations(range(n)):
            if rel_err(n_norm(S, *X[list(perm)]), ref) > 1e-12:
                bad["ii"] += 1
                break
        # (iii) absolute homogeneity at 1e-12 relative.
        a = float(rng.standard_normal() * 10)
        Z = X.copy()
        Z[0] *= a
        if rel_err(n_norm(S, *Z), abs(a) * ref) > 1e-12:
            bad["iii"] += 1
        # (iv) triangle inequality in the first slot, absolute slack 1e-9.
        W = X.copy()
        W[0] = rng.standard_normal(d)
        V = X.copy()
        V[0] = X[0] + W[0]
        if n_norm(S, *V) > n_norm(S, *X) + n_norm(S, *W) + 1e-9:
            bad["iv"] += 1
    dt = time.perf_counter() - t0
    ok = sum(bad.values()) == 0 and dt < 5.0
    record(1, ok, f"violations {bad}, {dt:.2f} s")
    assert ok


# --- 2 -------------------------------------------------------------------------


def test_02_functional_norm_oracle():
    rng = np.random.default_rng(SEED + 2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        S = random_space(rng, 6)
        T = make_functional(S, S.from_complement(rng.standard_normal(S.complement_dim)))
        exact = functional_norm(T)
        for formula in ("i", "ii", "iii"):
            worst = max(worst, rel_err(functional_norm_estimate(T, formula), exact))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 30.0
    record(2, ok, f"max relative error {worst:.2e}, {dt:.2f} s")
    assert ok


# --- 3 -------------------------------------------------------------------------


def test_03_spectral_vs_optimizer():
    rng = np.random.default_rng(SEED + 3)
    worst = 0.0
    for _ in range(200):
        S = random_space(rng, 6)
        k = S.complement_dim
        m = int(rng.integers(k, 13))
        C = rng.standard_normal((m, k))
        while np.linalg.cond(C) > 1e3:
            C = rng.standard_normal((m, k))
        F = PFrameFamily.from_coeffs(S, C @ S.complement_basis.T, 2.0)
        be = optimal_bounds(F, "spectral")
        bo = optimal_bounds(F, "optimizer")
        worst = max(worst, rel_err(be.lower, bo.lower), rel_err(be.upper, bo.upper))
    ok = worst <= 1e-6
    record(3, ok, f"max relative error {worst:.2e} over 200 families")
    assert ok


# --- 4 -------------------------------------------------------------------------


def test_04_bessel_sum():
    bad = 0
    for inst in generated("thm3.4", 200):
        v = run_check(inst, "thm3.4")
        d = v.details
        cap = 2.0 ** inst.p * max(d["bessel_first"], d["bessel_second"]) * (1 + 1e-8)
        bad += not (v.empirical.upper <= cap and v.status == "pass")
    record(4, bad == 0, f"{bad} of 200 above 2^p max(B1, B2)")
    assert bad == 0


# --- 5 -------------------------------------------------------------------------


def test_05_duality():
    worst_recon = worst_ident = 0.0
    floors_bad = 0
    for inst in generated("thm3.8", 200):
        v = run_check(inst, "thm3.8")
        d = v.details
        worst_recon = max(worst_recon, d["reconstruction_residual"])
        worst_ident = max(worst_ident, d["identity_residual"])
        floors_bad += not (v.empirical.lower >= d["lower_floor_p"] * (1 - 1e-6)
                           and d["dual_bounds"][0] >= d["lower_floor_q"] * (1 - 1e-6))
    ok = worst_recon <= 1e-9 and worst_ident <= 1e-9 and floors_bad == 0
    record(5, ok, f"reconstruction {worst_recon:.1e}, identity {worst_ident:.1e}, "
                  f"floor violations {floors_bad}")
    assert ok


# --- 6 -------------------------------------------------------------------------


def test_06_synthesis_norm():
    worst = 0.0
    for i, inst in enumerate(generated("thm3.9", 200)):
        inst.p = (1.5, 2.0, 3.0)[i % 3]
        v = run_check(inst, "thm3.9")
        B, sp = v.empirical.upper, v.details["synthesis_norm_p"]
        worst = max(worst, 0.0 if B == sp else rel_err(sp, B))
    ok = worst <= 1e-6
    record(6, ok, f"max relative gap {worst:.2e}, p in {{1.5, 2, 3}}")
    assert ok


# --- 7 -------------------------------------------------------------------------


def test_07_product_equality():
    worst = 0.0
    for inst in generated("thm3.11", 200):
        v = run_check(inst, "thm3.11")
        worst = max(worst, rel_err(v.empirical.lower, v.predicted_lower),
                    rel_err(v.empirical.upper, v.predicted_upper))
    ok = worst <= 1e-6
    record(7, ok, f"max relative error {worst:.2e}")
    assert ok


# --- 8 -------------------------------------------------------------------------


def test_08_rank_one():
    bad = 0
    thin = 0
    for inst in generated("thm4.1", 500):
        v = run_check(inst, "thm4.1")
        d = v.details
        cap = d["lower_bound_A"] / d["R_norm"] ** inst.p
        if not d["c_p_sum"] <= 0.9 * cap:
            thin += 1  # generator contract: margin at least 0.1 A / ||R||^p
        bad += not (d["is_frame"] and v.empirical.lower > 0 and v.status == "pass")
    ok = bad == 0 and thin == 0
    record(8, ok, f"{bad} of 500 lost the frame property, {thin} below the 0.1 margin")
    assert ok


# --- 9 -------------------------------------------------------------------------


def test_09_envelopes():
    lines, ok = [], True
    for tid in ("thm4.2", "thm5.1", "cor5.2", "thm5.3"):
        counts = {"pass": 0, "fail": 0, "inconclusive": 0}
        for inst in generated(tid, 200):
            counts[run_check(inst, tid).status] += 1
        rate = counts["inconclusive"] / 200
        ok &= counts["fail"] == 0 and rate < 0.02
        lines.append(f"{tid} {counts['pass']}/{counts['fail']}/{counts['inconclusive']}")
    record(9, ok, "pass/fail/inconclusive " + ", ".join(lines))
    assert ok


# --- 10 ------------------------------------------------------------------------


def test_10_sums():
    bad = {"thm5.4": 0, "thm5.5": 0}
    stated_broken = {"thm5.4": 0, "thm5.5": 0}
    for tid in bad:
        for inst in generated(tid, 200):
            v = run_check(inst, tid)
            emp = v.empirical
            bad[tid] += not (v.status == "pass"
                             and emp.lower >= v.predicted_lower * (1 - 1e-6)
                             and emp.upper <= v.predicted_upper * (1 + 1e-6))
            stated_broken[tid] += not v.details["paper_upper_respected"]
    ok = sum(bad.values()) == 0
    record(10, ok, f"violations {bad}; stated upper bound without l^(p-1) exceeded {stated_broken}")
    assert ok


# --- 11 ------------------------------------------------------------------------


@pytest.mark.slow
def test_11_fuzz_campaign(tmp_path):
    trials, seed = 10_000, 1
    t0 = time.perf_counter()
    summary, bad = {}, 0
    for tid in THEOREM_IDS:
        out = tmp_path / f"{tid}.json"
        code = cli.main(["fuzz", tid, "--trials", str(trials), "--dim-max", "5", "--seed", str(seed),
                         "--repro-dir", str(tmp_path / "repro"), "--out", str(out)])
        rep = json.loads(out.read_text())["results"]
        summary[tid] = rep["counts"]
        bad += rep["counts"]["fail"] + rep["counts"]["error"]
        # Reproducers and a sample of trials must replay to identical verdicts.
        paths = [f["reproducer"] for f in rep["failures"] if f["reproducer"]]
        cfg = OptimizerConfig(seed=seed)
        for i in range(3):
            p = tmp_path / f"{tid}-sample{i}.json"
            p.write_text(trial_instance(tid, seed, i, 5, cfg).dumps())
            paths.append(str(p))
        for path in paths:
            inst = load_instance(path)
            a = tmp_path / "replay_a.json"
            b = tmp_path / "replay_b.json"
            cli.main(["check", tid, path, "--out", str(a)])
            cli.main(["check", tid, path, "--out", str(b)])
            replay = json.loads(a.read_text())["results"]
            direct = run_check(inst, tid).to_dict()
            if replay != direct or a.read_bytes() != b.read_bytes():
                bad += 1
        assert code in (0, 1)
    dt = time.perf_counter() - t0
    fails = {t: c["fail"] + c["error"] for t, c in summary.items() if c["fail"] + c["error"]}
    incon = sum(c["inconclusive"] for c in summary.values())
    ok = bad == 0 and dt < 600.0
    record(11, ok, f"{trials * len(THEOREM_IDS)} trials in {dt:.0f} s, "
                   f"failures {fails or 0}, inconclusive {incon}")
    assert ok


# --- 12 ------------------------------------------------------------------------


def _report_commands(workdir: Path) -> list[list[str]]:
    cmds = [
        ["norm", str(INSTANCES / "parseval.json"), "--x", "3,4,7"],
        ["bounds", str(INSTANCES / "parseval.json")],
        ["bounds", str(INSTANCES / "deficient.json")],
        ["dual", str(INSTANCES / "rank_one.json")],
        ["product", str(INSTANCES / "product.json")],
        ["check", "thm5.3", str(INSTANCES / "equivalence_paper_min.json")],
        ["check", "thm5.1", str(INSTANCES / "stability_infeasible.json")],
    ]
    cfg = OptimizerConfig(seed=SEED)
    for tid in THEOREM_IDS:
        path = workdir / f"{tid}.json"
        path.write_text(trial_instance(tid, SEED, 0, 5, cfg).dumps())
        cmds.append(["check", tid, str(path)])
        cmds.append(["fuzz", tid, "--trials", "25", "--repro-dir", str(workdir / "repro")])
    return [c + ["--seed", str(SEED)] for c in cmds]


def test_12_determinism(tmp_path):
    cmds = _report_commands(tmp_path)
    first, second = tmp_path / "first", tmp_path / "second"
    first.mkdir()
    second.mkdir()
    for i, c in enumerate(cmds):
        cli.main(c + ["--out", str(first / f"{i}.json")])
    # The second pass runs in a fresh interpreter so no cache carries over.
    script = "import sys, json; from pframes import cli\n" \
             "for i, c in enumerate(json.loads(sys.argv[1])):\n" \
             "    cli.main(c + ['--out', sys.argv[2] + f'/{i}.json'])\n"
    subprocess.run([sys.executable, "-c", script, json.dumps(cmds), str(second)], check=True)
    diff = [i for i in range(len(cmds))
            if (first / f"{i}.json").read_bytes() != (second / f"{i}.json").read_bytes()]
    ok = not diff
    record(12, ok, f"{len(cmds)} reports, {len(diff)} differ")
    assert ok
