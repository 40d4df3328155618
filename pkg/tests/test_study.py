import numpy as np
import pytest

from tenmix import study
from tenmix.errors import ArgumentError, TenmixError
from tenmix.hecm import HecmConfig
from tenmix.simulation import SimDesign

DESIGN = SimDesign(n=80, dims=(4, 4, 4), K=2, R=1)
CFG = HecmConfig(K=2, R=1, lambda0=0.05, lambda1=0.001, max_iter=5)


def test_default_penalties():
    assert study.default_penalties(800) == (0.1, 5e-4)
    l0, _ = study.default_penalties(200)
    assert np.isclose(l0, 0.2)


def test_seeds_are_reproducible():
    assert study.replication_seeds(3, 4) == study.replication_seeds(3, 4)
    assert len(set(study.replication_seeds(3, 4))) == 4


def test_single_replication_has_zero_stderr(tmp_path):
    rows, records = study.replicate(DESIGN, CFG, 1, seed=1)
    assert all(r["stderr"] == 0.0 for r in rows if r["n_reps"])
    assert records[0]["invariant_violations"] == []
    study.write_summary_csv(rows, tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().startswith("metric,mean,stderr,n_reps\n")


def test_threads_do_not_change_output(tmp_path):
    a, _ = study.replicate(DESIGN, CFG, 3, seed=4, threads=1)
    b, _ = study.replicate(DESIGN, CFG, 3, seed=4, threads=2)
    study.write_summary_csv(a, tmp_path / "a.csv")
    study.write_summary_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_failures_are_counted():
    with pytest.raises(TenmixError, match="replications failed"):
        study.replicate(DESIGN, HecmConfig(K=2, R=1, lambda0=1e6), 2)
    with pytest.raises(ArgumentError):
        study.replicate(DESIGN, CFG, 0)


def test_summary_ignores_nan():
    recs = [{"status": "converged", "CE": 0.0, "FPR": float("nan")},
            {"status": "converged", "CE": 0.5, "FPR": float("nan")},
            {"status": "failed"}]
    rows = {r["metric"]: r for r in study.summarize(recs, ("CE", "FPR"))}
    assert rows["CE"]["mean"] == 0.25 and rows["CE"]["n_reps"] == 2
    assert np.isnan(rows["FPR"]["mean"]) and rows["FPR"]["n_reps"] == 0


def test_rate_study_shape():
    rows, slope = study.rate_study([80, 160], DESIGN, 1, cfg_fields={"max_iter": 5})
    assert [r["n"] for r in rows] == [80, 160] and np.isfinite(slope)
