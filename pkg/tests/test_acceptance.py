"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the ``acceptance criteria`` section of the pytest
terminal summary. Criteria 4-6 run their workloads once per session through
module-scoped fixtures, and criterion 9 re-checks the traces they produce.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from omp_sparse import (FixedIterations, L2Ball, LInfCorrelation, ResidualL2,
                        SparseSignal, delta_threshold, evaluate_guarantees,
                        gaussian_l2_bound, gen_gaussian_matrix,
                        gen_incoherent_matrix, lemma31_gap, mutual_incoherence,
                        omp_run, rip_exact)
from omp_sparse.harness import CoeffPolicy, ExperimentConfig, run_experiment
from omp_sparse.oracle import (exhaustive_best_support, instance_rng,
                               run_lemma_suite, run_selection_suite)

from conftest import ACCEPTANCE, trace_invariant_violations

pytestmark = pytest.mark.slow


def record(num, passed, detail):
    ACCEPTANCE[num] = (bool(passed), detail)
    print(f"criterion {num}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, detail


# ---------------------------------------------------------------------------
# shared workloads

def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def selection_run():
    return _timed(lambda: run_selection_suite(1000, seed=4242, min_hits=500))


def _recovery_config(noise, min_magnitude, seed):
    return ExperimentConfig(
        m=50, n=60, K=2, trials=1000, noise=noise,
        coeff_policy=CoeffPolicy(min_magnitude, "uniform", 2.0),
        master_seed=seed, stopping="auto", certify=True,
        matrix_mode="fresh", matrix_ensemble="incoherent",
        require_hypotheses=True)


@pytest.fixture(scope="module")
def l2_run():
    config = _recovery_config(L2Ball(1.0), 5.5, 20241016)
    return config, _timed(lambda: run_experiment(config, keep_traces=True))


@pytest.fixture(scope="module")
def linf_run():
    config = _recovery_config(LInfCorrelation(0.4), 5.5, 20241017)
    return config, _timed(lambda: run_experiment(config, keep_traces=True))


# ---------------------------------------------------------------------------

def test_criterion_01_exact_rip_sanity():
    start = time.perf_counter()
    bad = []
    for seed in range(100):
        A = gen_gaussian_matrix(8, 12, seed)
        mu = mutual_incoherence(A).mu
        deltas = [rip_exact(A, K).delta for K in range(1, 7)]
        if abs(deltas[0]) > 1e-12:
            bad.append((seed, "delta_1"))
        if abs(deltas[1] - mu) > 1e-10:
            bad.append((seed, "delta_2 != mu"))
        if any(b < a - 1e-12 for a, b in zip(deltas, deltas[1:])):
            bad.append((seed, "not monotone"))
        if any(d > K * mu + 1e-12 for K, d in enumerate(deltas, 1)):
            bad.append((seed, "above K mu"))
    elapsed = time.perf_counter() - start
    record(1, not bad and elapsed < 60,
           f"100 matrices 8x12, violations={len(bad)}, {elapsed:.1f}s")


def test_criterion_02_lemma_suites():
    start = time.perf_counter()
    results = [run_lemma_suite(lemma, 10_000, seed=2)
               for lemma in ("2.1", "2.2", "2.3", "offsupport")]
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{r['lemma']}: {r['violations']}/{r['checks_run']} "
                       f"(worst {r['worst_margin']:.1e})" for r in results)
    alt = results[1]["order_k_reading"]
    detail += (f"; 2.2 order-K reading (informational): "
               f"{alt['violations']}/{alt['checks_run']}; {elapsed:.0f}s")
    ok = all(r["violations"] == 0 and r["instances"] == 10_000 for r in results)
    record(2, ok and elapsed < 300, detail)


def test_criterion_03_lemma31_sweep():
    start = time.perf_counter()
    failures = [K for K in range(1, 1001)
                if not lemma31_gap(delta_threshold(K) * (1 - 1e-9), K) > 0]
    above = sum(lemma31_gap(delta_threshold(K) * (1 + 1e-6), K) > 0
                for K in range(1, 1001))
    elapsed = time.perf_counter() - start
    record(3, not failures and elapsed < 1,
           f"K=1..1000 failures={len(failures)}; just above threshold still "
           f"positive for {above}/1000 (not contractual); {elapsed * 1e3:.0f}ms")


def test_criterion_04_selection_condition(selection_run):
    res, elapsed = selection_run
    ok = (res["instances_with_condition"] >= 500 and res["counterexamples"] == 0
          and elapsed < 600)
    record(4, ok,
           f"{res['instances_with_condition']} certified instances "
           f"({res['steps_with_condition']} steps) with the condition, "
           f"counterexamples={res['counterexamples']}, "
           f"{res['instances_run']} drawn, {elapsed:.0f}s")


def _recovery_detail(config, summary, records, elapsed):
    deltas = [r.delta_kp1 for r in records]
    return (f"kept={summary['trials']} attempts={summary['attempts']} "
            f"discarded={summary['discarded']} "
            f"max delta_3={max(deltas):.4f} (<{delta_threshold(config.K):.5f}) "
            f"recovery|hyp={summary['recovery_rate_given_hypotheses']} "
            f"counterexamples={summary['counterexample_count']} "
            f"halts={summary['halt_reasons']} {elapsed:.0f}s")


def test_criterion_05_l2_noise_end_to_end(l2_run):
    config, ((summary, records), elapsed) = l2_run
    ok = (summary["trials"] == 1000
          and all(r.all_hypotheses for r in records)
          and all(r.delta_kp1 < delta_threshold(config.K) for r in records)
          and summary["counterexample_count"] == 0
          and summary["recovery_rate_given_hypotheses"] == 1.0
          and elapsed < 900)
    record(5, ok, _recovery_detail(config, summary, records, elapsed))


def test_criterion_06_linf_noise_end_to_end(linf_run):
    config, ((summary, records), elapsed) = linf_run
    # diagnostic only: do the first K selections hit the support even when
    # the correlation rule then keeps going?
    first_k = sum(set(r.trace.selected[:config.K]) == set(r.instance[1].support)
                  for r in records)
    ok = (summary["trials"] == 1000
          and all(r.all_hypotheses for r in records)
          and summary["counterexample_count"] == 0
          and summary["recovery_rate_given_hypotheses"] == 1.0
          and elapsed < 900)
    record(6, ok, _recovery_detail(config, summary, records, elapsed)
           + f"; first {config.K} selections correct in {first_k}/{len(records)}")


def test_criterion_07_gaussian_calibration():
    start = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([7, 34])))
    draws = 100_000
    parts, ok = [], True
    for m in (16, 64, 256):
        bound = gaussian_l2_bound(m, 1.0)
        exceed = 0
        for _ in range(draws // 10_000):
            z = rng.standard_normal((10_000, m))
            exceed += int(np.count_nonzero(np.linalg.norm(z, axis=1) > bound))
        rate = exceed / draws
        ok &= rate <= 1.5 / m
        parts.append(f"m={m}: {rate:.5f} <= {1.5 / m:.5f}")
    elapsed = time.perf_counter() - start
    record(7, ok and elapsed < 60, "; ".join(parts) + f"; {elapsed:.1f}s")


def _small_instance(i):
    rng = instance_rng(808, i)
    if i % 2 == 0:
        K = int(rng.integers(1, 4))
        m = int(rng.integers(6, 11))
        n = int(rng.integers(m + 1, 15))
        A = gen_gaussian_matrix(m, n, int(rng.integers(2**63)))
    else:
        m, n, K, target = ((12, 14, 1, 0.1), (12, 13, 2, 0.08))[(i // 2) % 2]
        A = gen_incoherent_matrix(m, n, int(rng.integers(2**63)), target)
    c = 10 ** rng.uniform(math.log10(0.2), math.log10(2.0))
    supp = np.sort(rng.choice(n, K, replace=False))
    vals = rng.choice([-1.0, 1.0], K) * rng.uniform(c, 2 * c, K)
    x = SparseSignal(n, tuple(supp), tuple(vals))
    B2 = 0.1
    g = rng.standard_normal(m)
    z = g * (rng.random() * B2 / np.linalg.norm(g))
    return A, x, z, B2


def test_criterion_08_oracle_dominance():
    start = time.perf_counter()
    dominance_bad = agree_bad = hyp_count = 0
    for i in range(200):
        A, x, z, B2 = _small_instance(i)
        K = x.sparsity
        y = A.entries @ x.dense() + z
        best = exhaustive_best_support(A, y, K)
        greedy = omp_run(A, y, FixedIterations(K))
        if greedy.final_residual_l2 < best.residual_l2 - 1e-10:
            dominance_bad += 1
        delta = rip_exact(A, K + 1).delta
        reports = evaluate_guarantees(delta, x, L2Ball(B2), A.m)
        if all(r.satisfied for r in reports):
            hyp_count += 1
            stopped = omp_run(A, y, ResidualL2(B2))
            truth = set(x.support)
            if not (set(best.support) == truth == set(stopped.final_support)
                    == set(greedy.final_support)):
                agree_bad += 1
    elapsed = time.perf_counter() - start
    ok = dominance_bad == 0 and agree_bad == 0 and hyp_count > 0 and elapsed < 300
    record(8, ok, f"200 instances: dominance violations={dominance_bad}; "
                  f"{hyp_count} hypothesis-satisfying, disagreements={agree_bad}; "
                  f"{elapsed:.1f}s")


def test_criterion_09_trace_invariants(selection_run, l2_run, linf_run):
    res, _ = selection_run
    checked = bad = 0
    for A, y, _, _, trace in res["traces"]:
        checked += 1
        bad += bool(trace_invariant_violations(A, y, trace))
    for _, ((_, records), _) in (l2_run, linf_run):
        for rec in records:
            A, _, _, y = rec.instance
            checked += 1
            bad += bool(trace_invariant_violations(A, y, rec.trace))
    record(9, bad == 0 and checked > 0,
           f"{checked} traces from criteria 4-6, violating={bad}")


def test_criterion_10_determinism(tmp_path):
    config = {"m": 20, "n": 30, "K": 2, "trials": 40,
              "noise": {"type": "l2_ball", "B2": 0.2},
              "coeff_policy": {"min_magnitude": 1.0, "magnitude": "uniform"},
              "master_seed": 99, "matrix_ensemble": "incoherent"}
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    outputs = []
    for run in ("a", "b"):
        csv_path, json_path = tmp_path / f"{run}.csv", tmp_path / f"{run}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "omp_sparse.cli", "experiment", "--config", str(cfg),
             "--csv", str(csv_path), "--summary", str(json_path)],
            capture_output=True, text=True)
        assert proc.returncode in (0, 3), proc.stderr
        outputs.append((csv_path.read_bytes(), json_path.read_bytes()))
    same = outputs[0] == outputs[1]
    record(10, same, f"two CLI runs, CSV {len(outputs[0][0])} bytes and summary "
                     f"{len(outputs[0][1])} bytes, identical={same}")
