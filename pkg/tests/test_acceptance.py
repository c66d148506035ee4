"""Acceptance gates for the estimation pipeline.

Each test is one criterion and prints a single PASS/FAIL line with the
measured quantities next to the pinned tolerance, so a log of this module
reads as a checklist. Monte Carlo gates use fixed seeds; the matched-scale
recovery gate loads the frozen generator calibration shipped with the
sample data.
"""

from __future__ import annotations

import filecmp
import json
import os
import time

import numpy as np
import pandas as pd
import pytest

import frontier_rd as fr
from frontier_rd.cli import main as cli_main
from frontier_rd.configio import read_kv
from frontier_rd.reference import DENSITY_TESTS

AT_CUTOFF = dict(
    log_population_mean=8.517,
    log_density_mean=5.991,
    nonag_logit_mean=1.0986,
)


@pytest.fixture
def gate(capsys):
    def _gate(name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{name}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"{name}: {detail}"

    return _gate


def _random_instance(rng):
    n = int(rng.integers(80, 501))
    n_groups = int(rng.integers(5, 21))
    g = np.concatenate([np.arange(n_groups), rng.integers(0, n_groups, n)])[:n]
    w = rng.normal(size=(n, 2))
    z = (rng.uniform(size=n) < 0.5).astype(float)
    u = rng.normal(size=n)
    t = 0.6 * z + 0.2 * w[:, 0] + 0.7 * u + rng.normal(size=n)
    y = 1.3 * t + 0.4 * w[:, 0] - 0.1 * w[:, 1] + u + rng.normal(size=n)
    return pd.DataFrame(
        {
            "y": y,
            "t": t,
            "z": z,
            "w0": w[:, 0],
            "w1": w[:, 1],
            "g": [f"g{v:02d}" for v in g],
        }
    )


def test_criterion_1_algebraic_identities(gate):
    """2SLS equals the reduced-form/first-stage ratio, absorbed fixed
    effects equal explicit dummies, the first-stage F is the squared t, and
    the partial R2 matches its sum-of-squares definition, all to 1e-8 on
    100 random instances in under 10 seconds."""
    rng = np.random.default_rng(12345)
    start = time.monotonic()
    worst = {"wald": 0.0, "fe_coef": 0.0, "fe_se": 0.0, "f": 0.0, "pr2": 0.0}
    for _ in range(100):
        frame = _random_instance(rng)
        spec = fr.RegressionSpec(
            outcome="y",
            controls=("w0", "w1"),
            endogenous="t",
            instrument="z",
            fixed_effect="g",
            cluster="g",
        )
        iv = fr.tsls(spec, frame)
        fs = fr.first_stage_regression(spec, frame)
        rf = fr.reduced_form_regression(spec, frame)
        wald = rf.coefficients["z"] / fs.coefficients["z"]
        worst["wald"] = max(
            worst["wald"], abs(iv.coefficients["t"] - wald) / abs(wald)
        )
        f_direct = (fs.coefficients["z"] / fs.se["z"]) ** 2
        worst["f"] = max(worst["f"], abs(f_direct - fs.tstat("z") ** 2))

        dummies = pd.get_dummies(frame["g"], prefix="d", drop_first=True, dtype=float)
        wide = pd.concat([frame, dummies], axis=1)
        dummy = fr.tsls(
            fr.RegressionSpec(
                outcome="y",
                controls=("w0", "w1", *dummies.columns),
                endogenous="t",
                instrument="z",
                cluster="g",
            ),
            wide,
        )
        worst["fe_coef"] = max(
            worst["fe_coef"],
            abs(iv.coefficients["t"] - dummy.coefficients["t"]) / abs(iv.coefficients["t"]),
        )
        worst["fe_se"] = max(worst["fe_se"], abs(iv.se["t"] - dummy.se["t"]) / iv.se["t"])

        pr2 = fr.partial_r2(spec, frame)
        full = fr.ols(
            fr.RegressionSpec(outcome="t", controls=("z", "w0", "w1"), fixed_effect="g"),
            frame,
        )
        restricted = fr.ols(
            fr.RegressionSpec(outcome="t", controls=("w0", "w1"), fixed_effect="g"), frame
        )
        worst["pr2"] = max(worst["pr2"], abs(pr2 - (1.0 - full.ssr / restricted.ssr)))
    elapsed = time.monotonic() - start
    ok = all(v < 1e-8 for v in worst.values()) and elapsed < 10.0
    gate(
        "criterion 1: algebraic identities",
        ok,
        "worst dev wald {wald:.1e} fe-coef {fe_coef:.1e} fe-se {fe_se:.1e} "
        "f {f:.1e} partial-r2 {pr2:.1e} (tol 1e-8), {sec:.1f}s (max 10s), "
        "100 instances".format(sec=elapsed, **worst),
    )


def test_criterion_2_matched_scale_recovery(gate):
    """The frozen matched-scale calibration recovers its planted effect:
    over 500 replications the mean bias is within 0.1, 95 percent interval
    coverage lies in [0.92, 0.97], and the mean first-stage F is within a
    factor of two of the recorded reference, inside a 300 second budget."""
    kv = read_kv("sample_data/dgp_reference_scale.cfg")
    reps = int(kv.pop("reps"))
    reference_f = float(kv.pop("reference_first_stage_f"))
    params = fr.DgpParams.from_mapping(kv)
    start = time.monotonic()
    result = fr.replicate(params, reps)
    elapsed = time.monotonic() - start
    ok = (
        result.n_failed == 0
        and abs(result.bias) < 0.1
        and 0.92 <= result.coverage <= 0.97
        and reference_f / 2.0 <= result.mean_f_stat <= reference_f * 2.0
        and elapsed < 300.0
    )
    gate(
        "criterion 2: matched-scale recovery",
        ok,
        f"bias {result.bias:+.4f} (max 0.1), coverage {result.coverage:.3f} "
        f"(in [0.92, 0.97]), mean F {result.mean_f_stat:.1f} "
        f"(in [{reference_f / 2:.2f}, {reference_f * 2:.2f}]), "
        f"{result.n_reps} reps in {elapsed:.0f}s (max 300s)",
    )


def test_criterion_3_test_size_under_null(gate):
    """With a planted effect of exactly zero the 5 percent test rejects at
    close to its nominal rate: over 1000 replications the rejection rate
    lies in [0.03, 0.07]."""
    params = fr.DgpParams(
        n_settlements=8000,
        n_districts=400,
        n_states=20,
        compliance_jump=0.4,
        takeup_level=0.3,
        outcome_noise_sd=0.5,
        cluster_rho=0.2,
        endogeneity=0.3,
        late={"amenity_count": 0.0},
        seed=2100,
        **AT_CUTOFF,
    )
    result = fr.replicate(params, 1000)
    ok = result.n_failed == 0 and 0.03 <= result.rejection_rate <= 0.07
    gate(
        "criterion 3: size of the nominal 5% test",
        ok,
        f"rejection rate {result.rejection_rate:.4f} (in [0.03, 0.07]) "
        f"over {result.n_reps} null replications",
    )


def test_criterion_4_density_test_calibration(gate):
    """The manipulation test is calibrated: under a smooth density it
    rejects at most 7 percent of 500 seeds at the 5 percent level, and it
    detects a twofold density jump in at least 90 percent of 500 seeds."""
    null_rejections = 0
    for seed in range(500):
        x = np.random.default_rng(seed).uniform(-1.0, 1.0, 5000)
        null_rejections += fr.mccrary_test(x).pvalue < 0.05
    null_rate = null_rejections / 500.0

    detections = 0
    for seed in range(500):
        rng = np.random.default_rng(10_000 + seed)
        side = rng.uniform(size=10_000) < 2.0 / 3.0
        x = np.where(side, rng.uniform(0, 1, 10_000), rng.uniform(-1, 0, 10_000))
        res = fr.mccrary_test(x)
        detections += res.pvalue < 0.05 and res.log_diff > 0
    power = detections / 500.0

    refs = ", ".join(
        f"{name} t={vals['statistic']:+.3f} p={vals['pvalue']:.3f}"
        for name, vals in sorted(DENSITY_TESTS.items())
    )
    ok = null_rate <= 0.07 and power >= 0.90
    gate(
        "criterion 4: density-test calibration",
        ok,
        f"null rejection {null_rate:.3f} (max 0.07), power at 2x jump "
        f"{power:.3f} (min 0.90); recorded reference tests: {refs}",
    )


def test_criterion_5_design_invariants(gate):
    """Eligibility matches a brute-force recount on 1000 random rows
    (boundaries inclusive), and on 10000 random triples the soft minimum
    stays within [min - tau*log(3), min] and never exceeds the hard
    minimum."""
    rng = np.random.default_rng(77)
    pop = rng.uniform(0.0, 15000.0, 1000)
    den = rng.uniform(0.0, 1200.0, 1000)
    non = rng.uniform(0.0, 1.0, 1000)
    # plant exact-cutoff values to pin the inclusive rule
    pop[:5], den[5:10], non[10:15] = 5000.0, 400.0, 0.75
    r_p, r_d, r_n = fr.normalize(pop, den, non)
    _, _, _, z = fr.eligibility(r_p, r_d, r_n)
    brute = [
        int(p >= 5000.0 and d >= 400.0 and s >= 0.75)
        for p, d, s in zip(pop, den, non)
    ]
    eligibility_ok = list(z) == brute

    triples = rng.uniform(-1e6, 1e6, size=(10_000, 3))
    triples[:100] = rng.uniform(-0.5, 0.5, size=(100, 3))
    tau = 0.05
    sm = fr.frontier_distance(triples[:, 0], triples[:, 1], triples[:, 2], tau)
    hm = fr.hard_min(triples[:, 0], triples[:, 1], triples[:, 2])
    lower = hm - tau * np.log(3.0) - 1e-9
    bounds_ok = bool(np.all(sm >= lower) and np.all(sm <= hm + 1e-9))
    finite_ok = bool(np.all(np.isfinite(sm)))

    ok = eligibility_ok and bounds_ok and finite_ok
    gate(
        "criterion 5: design invariants",
        ok,
        f"eligibility recount {'exact' if eligibility_ok else 'MISMATCH'} on 1000 rows; "
        f"softmin within [min - tau*ln3, min] on 10000 triples: {bounds_ok}, "
        f"all finite: {finite_ok}",
    )


def test_criterion_6_exclusion_check_calibration(gate):
    """The direct-effect column of the exclusion check recovers a planted
    violation of 0.5 to within 0.1 on average over 150 replications, and
    stays insignificant at 5 percent in at least 93 percent of 300
    replications when no violation is planted."""
    base = dict(
        n_settlements=4000,
        n_districts=120,
        compliance_jump=0.4,
        takeup_level=0.3,
        outcome_noise_sd=0.5,
        endogeneity=0.0,
        **AT_CUTOFF,
    )
    estimates = []
    for rep in range(150):
        params = fr.DgpParams(
            direct_effect={"amenity_count": 0.5}, seed=500 + rep, **base
        )
        estimates.append(fr.exclusion_check(fr.generate(params), "amenity_count").direct)
    mean_direct = float(np.mean(estimates))

    insignificant = 0
    for rep in range(300):
        params = fr.DgpParams(seed=900 + rep, **base)
        res = fr.exclusion_check(fr.generate(params), "amenity_count")
        insignificant += res.direct_pvalue > 0.05
    null_rate = insignificant / 300.0

    ok = abs(mean_direct - 0.5) < 0.1 and null_rate >= 0.93
    gate(
        "criterion 6: exclusion-check calibration",
        ok,
        f"planted 0.5 recovered as {mean_direct:.4f} (tol 0.1, 150 reps); "
        f"null insignificant share {null_rate:.3f} (min 0.93, 300 reps)",
    )


def test_criterion_7_cli_determinism(gate, tmp_path):
    """Running the full command pipeline twice on the bundled sample
    produces byte-identical outputs in every file."""
    csv = "sample_data/synthetic_panel.csv"
    schema = "sample_data/schema.cfg"
    run_dirs = []
    for label in ("first", "second"):
        out = tmp_path / label
        steps = [
            ["ingest", "--csv", csv, "--schema", schema, "--out-dir", str(out)],
            ["design", "--csv", csv, "--schema", schema, "--out-dir", str(out)],
            [
                "estimate",
                "--csv",
                csv,
                "--schema",
                schema,
                "--outcome",
                "primary_schools",
                "--local",
                "--out-dir",
                str(out),
            ],
            [
                "diagnose",
                "--csv",
                csv,
                "--schema",
                schema,
                "--outcome",
                "primary_schools",
                "--local",
                "--out-dir",
                str(out),
            ],
            [
                "simulate",
                "--config",
                "sample_data/dgp_small.cfg",
                "--out-dir",
                str(out),
            ],
            ["report", "--results", str(out), "--out-dir", str(out)],
        ]
        for argv in steps:
            code = cli_main(argv)
            assert code == 0, f"exit {code} from {argv[0]}"
        run_dirs.append(out)

    names = sorted(os.listdir(run_dirs[0]))
    assert names == sorted(os.listdir(run_dirs[1]))
    mismatched = [
        name
        for name in names
        if not filecmp.cmp(run_dirs[0] / name, run_dirs[1] / name, shallow=False)
    ]
    # report.txt embeds no paths; manifests hash outputs by basename, so
    # everything must match bit for bit
    ok = not mismatched
    gate(
        "criterion 7: pipeline determinism",
        ok,
        f"{len(names)} output files byte-identical across repeat runs"
        + (f"; mismatches: {mismatched}" if mismatched else ""),
    )
