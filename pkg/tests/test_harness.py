import csv
import io
import json

import numpy as np
import pytest

from omp_sparse import Gaussian, L2Ball, LInfCorrelation, SenseMatrix
from omp_sparse.harness import (CSV_HEADER, CoeffPolicy, ExperimentConfig,
                                gen_sparse_signal, noise_within_bound,
                                records_to_csv, resolve_stopping, run_experiment,
                                run_trial, sample_noise, summary_to_json,
                                trial_seeds)
from omp_sparse.omp import CorrelationLInf, ResidualL2

from conftest import orthonormal_columns


def small_config(**kw):
    base = dict(m=12, n=16, K=2, trials=6, noise=L2Ball(0.05),
                coeff_policy=CoeffPolicy(1.0, "uniform"), master_seed=7)
    base.update(kw)
    return ExperimentConfig(**base)


def test_signal_examples():
    assert gen_sparse_signal(10, 0, CoeffPolicy(1.0), 1).support == ()
    assert gen_sparse_signal(10, 10, CoeffPolicy(1.0), 1).support == tuple(range(10))
    x = gen_sparse_signal(10, 4, CoeffPolicy(2.0), 3)
    assert all(abs(v) == 2.0 for v in x.values)
    assert gen_sparse_signal(50, 5, CoeffPolicy(1.0, "uniform"), 9) == \
        gen_sparse_signal(50, 5, CoeffPolicy(1.0, "uniform"), 9)


def test_signal_uniform_range():
    x = gen_sparse_signal(100, 40, CoeffPolicy(1.5, "uniform", 3.0), 2)
    mags = np.abs(x.values)
    assert mags.min() >= 1.5 and mags.max() <= 4.5


def test_policy_validation():
    with pytest.raises(ValueError):
        CoeffPolicy(0.0, "fixed")
    CoeffPolicy(0.0, "gaussian")
    with pytest.raises(ValueError):
        CoeffPolicy(1.0, "wild")


def test_noise_zero_radius():
    A = orthonormal_columns(8, 8, 0)
    draw = sample_noise(L2Ball(0.0), A, 1)
    assert not draw.z.any()
    assert noise_within_bound(L2Ball(0.0), draw)


def test_l2_noise_strictly_inside():
    A = SenseMatrix(orthonormal_columns(8, 8, 0))
    for s in range(500):
        draw = sample_noise(L2Ball(0.3), A, s)
        assert draw.realized_l2 < 0.3
        assert noise_within_bound(L2Ball(0.3), draw)


def test_linf_noise_strictly_inside():
    A = SenseMatrix(orthonormal_columns(12, 8, 0))
    for s in range(500):
        draw = sample_noise(LInfCorrelation(0.2), A, s)
        assert draw.realized_corr_inf < 0.2


def test_gaussian_noise_energy():
    A = SenseMatrix(orthonormal_columns(16, 16, 0))
    sq = [sample_noise(Gaussian(0.7), A, s).realized_l2 ** 2 for s in range(10000)]
    assert np.mean(sq) == pytest.approx(16 * 0.49, rel=0.05)


def test_trial_seeds_stable():
    assert trial_seeds(1, 2) == trial_seeds(1, 2)
    assert trial_seeds(1, 2) != trial_seeds(1, 3)
    assert len(set(trial_seeds(1, 2))) == 3


def test_resolve_stopping():
    assert resolve_stopping("auto", L2Ball(0.5), 10) == ResidualL2(0.5)
    assert resolve_stopping("auto", LInfCorrelation(0.5), 10) == CorrelationLInf(0.5)
    assert resolve_stopping("fixed:3", L2Ball(0.5), 10).K == 3
    with pytest.raises(ValueError):
        resolve_stopping("linf", L2Ball(0.5), 10)


def test_config_rejects_unknown_keys():
    d = small_config().to_dict()
    assert ExperimentConfig.from_dict(d) == small_config()
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({**d, "trails": 3})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({**d, "coeff_policy": {"min_magnitude": 1, "sgn": 1}})
    with pytest.raises(ValueError):
        small_config(K=13)


def test_noiseless_orthonormal_trial():
    config = small_config(m=8, n=8, noise=L2Ball(0.0))
    A = SenseMatrix(orthonormal_columns(8, 8, 5))
    rec = run_trial(config, 0, matrix=A, delta_kp1=0.0)
    assert rec.exact_support_match
    assert rec.hypotheses_satisfied["thm33"]


def test_single_trial_matches_run_trial():
    config = small_config(trials=1)
    summary, records = run_experiment(config)
    assert records == [run_trial(config, 0)]
    assert summary["trials"] == 1


def test_csv_schema_and_match_invariant():
    config = small_config(certify=True)
    _, records = run_experiment(config, keep_traces=True)
    rows = list(csv.reader(io.StringIO(records_to_csv(records))))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == config.trials + 1
    for rec in records:
        truth = set(rec.instance[1].support)
        assert rec.exact_support_match == (set(rec.recovered_support) == truth)


def test_uncertified_reports_no_hypotheses():
    summary, records = run_experiment(small_config(certify=False))
    assert summary["hypothesis_rate"] is None
    assert summary["recovery_rate_given_hypotheses"] is None
    assert all(r.delta_kp1 is None for r in records)
    assert records[0].csv_row()[1] == ""


def test_experiment_deterministic(tmp_path, monkeypatch):
    config = small_config(trials=10)
    monkeypatch.setenv("OMP_SPARSE_THREADS", "1")
    run_experiment(config, tmp_path / "a.csv", tmp_path / "a.json")
    monkeypatch.setenv("OMP_SPARSE_THREADS", "4")
    run_experiment(config, tmp_path / "b.csv", tmp_path / "b.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_require_hypotheses_discards():
    config = small_config(trials=5, require_hypotheses=True,
                          matrix_ensemble="incoherent", m=24, n=30,
                          coeff_policy=CoeffPolicy(0.5, "uniform"))
    summary, records = run_experiment(config)
    assert summary["attempts"] == summary["trials"] + summary["discarded"]
    assert all(r.all_hypotheses for r in records)


def test_fixed_matrix_mode():
    _, records = run_experiment(small_config(matrix_mode="fixed"))
    assert len({r.delta_kp1 for r in records}) == 1


def test_write_error_has_path(tmp_path):
    with pytest.raises(OSError, match="nope"):
        run_experiment(small_config(trials=1), tmp_path / "nope" / "x.csv")


def test_summary_json_roundtrip():
    summary, _ = run_experiment(small_config(trials=2))
    assert json.loads(summary_to_json(summary)) == summary
