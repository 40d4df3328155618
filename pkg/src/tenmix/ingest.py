"""Connectivity tensors from region-by-time series.

Each subject's ``p × L`` matrix becomes a ``p × p × T`` tensor whose slice
``t`` is the Fisher-transformed correlation matrix of window ``t``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DegenerateWarning, DegeneracyError, IngestionError
from .io import write_tnsr

R_MAX = 1 - 1e-6
MANIFEST = "manifest.json"


@dataclass
class SubjectSeries:
    id: str
    series: np.ndarray

    def __post_init__(self):
        self.series = np.asarray(self.series, dtype=float)
        if self.series.ndim != 2 or self.series.shape[0] < 2:
            raise ArgumentError(f"subject {self.id}: need a p x L matrix with p >= 2")
        if not np.all(np.isfinite(self.series)):
            raise ArgumentError(f"subject {self.id}: series contains non-finite values")


@dataclass
class WindowSpec:
    n_windows: int = 1
    window_len: int = 20

    def __post_init__(self):
        if self.n_windows < 1:
            raise ArgumentError(f"need at least one window, got {self.n_windows}")
        if self.window_len < 2:
            raise ArgumentError(f"window length must be >= 2, got {self.window_len}")

    def starts(self, L):
        """0-based start of every window; a single window covers the whole series."""
        if self.n_windows == 1:
            return np.array([0])
        if L < self.window_len:
            raise ArgumentError(f"series of length {L} is shorter than the window {self.window_len}")
        return np.rint(np.linspace(0, L - self.window_len, self.n_windows)).astype(int)

    def length(self, L):
        return L if self.n_windows == 1 else self.window_len


def fisher_correlation(block, label=""):
    """``atanh`` of the clamped Pearson correlations of the rows; zero diagonal."""
    centered = block - block.mean(axis=1, keepdims=True)
    sd = np.sqrt(np.sum(centered**2, axis=1))
    flat = np.flatnonzero(sd == 0)
    if flat.size:
        raise DegeneracyError(f"{label}region {flat[0]} has zero variance")
    z = centered / sd[:, None]
    r = z @ z.T
    off = ~np.eye(r.shape[0], dtype=bool)
    if np.any(np.abs(r[off]) > R_MAX):
        warnings.warn(f"{label}correlations clamped to +-{R_MAX}", DegenerateWarning, stacklevel=2)
    r = np.clip(r, -R_MAX, R_MAX)
    out = np.arctanh(r)
    np.fill_diagonal(out, 0.0)
    return (out + out.T) / 2


def build_tensor(s, w):
    L = s.series.shape[1]
    starts = w.starts(L)
    length = w.length(L)
    slices = []
    for t, a in enumerate(starts):
        label = f"subject {s.id}, window {t} (columns {a}..{a + length - 1}): "
        slices.append(fisher_correlation(s.series[:, a:a + length], label))
    return np.stack(slices, axis=2)


def read_subject_csv(path):
    path = Path(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except (ValueError, UserWarning) as exc:
        raise IngestionError(f"{path}: malformed CSV ({exc})") from exc
    try:
        return SubjectSeries(path.stem, arr)
    except ArgumentError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def load_cohort(directory, w):
    """``[(id, tensor)]`` for every ``*.csv`` in ``directory``, in lexicographic order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError(f"{directory}: not a directory")
    files = sorted(directory.glob("*.csv"))
    subjects = [read_subject_csv(f) for f in files]
    shapes = {}
    for s in subjects:
        shapes.setdefault(s.series.shape, []).append(s.id)
    if len(shapes) > 1:
        common = max(shapes, key=lambda k: len(shapes[k]))
        odd = {sid: list(shape) for shape, ids in shapes.items() if shape != common for sid in ids}
        raise IngestionError(f"subjects disagree with the common shape {common}: {odd}")
    return [(s.id, build_tensor(s, w)) for s in subjects]


def write_cohort(cohort, out_dir, w, series_len=None):
    """Write one TNSR file per subject plus a manifest; returns the manifest dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for sid, x in cohort:
        name = f"{sid}.tnsr"
        write_tnsr(out / name, x)
        entries.append({"id": sid, "path": name, "dims": list(x.shape)})
    manifest = {
        "n_windows": w.n_windows,
        "window_len": w.length(series_len) if series_len else w.window_len,
        "starts": w.starts(series_len).tolist() if series_len else None,
        "subjects": entries,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1))
    return manifest
