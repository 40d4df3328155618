import json

import numpy as np
import pytest

from tenmix import io
from tenmix.errors import ArgumentError, DegenerateWarning, DegeneracyError, IngestionError
from tenmix.ingest import (
    SubjectSeries,
    WindowSpec,
    build_tensor,
    fisher_correlation,
    load_cohort,
    write_cohort,
)


def _cohort_dir(tmp_path, rng, n=3, p=4, L=60):
    d = tmp_path / "raw"
    d.mkdir()
    for i in range(n):
        io.write_matrix_csv(d / f"sub{i:02d}.csv", rng.standard_normal((p, L)))
    return d


def test_slices_symmetric_zero_diagonal(rng):
    x = build_tensor(SubjectSeries("a", rng.standard_normal((5, 100))), WindowSpec(4, 30))
    assert x.shape == (5, 5, 4)
    for t in range(4):
        assert np.abs(x[:, :, t] - x[:, :, t].T).max() <= 1e-12
        np.testing.assert_array_equal(np.diag(x[:, :, t]), 0.0)


def test_single_window_is_full_series(rng):
    s = rng.standard_normal((4, 50))
    x = build_tensor(SubjectSeries("a", s), WindowSpec(1))
    r = np.corrcoef(s)
    np.fill_diagonal(r, 0.0)
    want = np.arctanh(r)
    np.testing.assert_allclose(x[:, :, 0], want, atol=1e-12)


def test_uncorrelated_series_give_small_z():
    s = np.random.default_rng(0).standard_normal((6, 2000))
    z = fisher_correlation(s)
    assert np.abs(z).max() < 0.1


def test_clamp_and_zero_variance(rng):
    s = rng.standard_normal((3, 20))
    s[1] = s[0]
    with pytest.warns(DegenerateWarning):
        z = fisher_correlation(s)
    assert np.isclose(z[0, 1], np.arctanh(1 - 1e-6))
    assert fisher_correlation(np.array([[1.0, -1, 1, -1], [1, 1, -1, -1]]))[0, 1] == 0.0
    s[2, :10] = 1.0
    with pytest.raises(DegeneracyError, match="region 2"):
        build_tensor(SubjectSeries("x", s), WindowSpec(2, 10))


def test_window_starts():
    w = WindowSpec(30, 20)
    st = w.starts(236)
    assert len(st) == 30 and st[0] == 0 and st[-1] == 216
    assert np.all(np.diff(st) > 0)
    with pytest.raises(ArgumentError):
        WindowSpec(2, 20).starts(10)


def test_cohort_round_trip(tmp_path, rng):
    src = _cohort_dir(tmp_path, rng)
    w = WindowSpec(3, 20)
    cohort = load_cohort(src, w)
    assert [sid for sid, _ in cohort] == ["sub00", "sub01", "sub02"]
    man = write_cohort(cohort, tmp_path / "out", w, series_len=60)
    assert man["starts"] == [0, 20, 40]
    assert json.loads((tmp_path / "out" / "manifest.json").read_text()) == man
    for sid, x in cohort:
        np.testing.assert_array_equal(io.read_tnsr(tmp_path / "out" / f"{sid}.tnsr"), x)


def test_cohort_errors(tmp_path, rng):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert load_cohort(empty, WindowSpec()) == []
    src = _cohort_dir(tmp_path, rng)
    io.write_matrix_csv(src / "sub09.csv", rng.standard_normal((5, 60)))
    with pytest.raises(IngestionError, match="sub09"):
        load_cohort(src, WindowSpec())
    (src / "sub09.csv").write_text("1,2,x\n")
    with pytest.raises(IngestionError, match="sub09.csv"):
        load_cohort(src, WindowSpec())
