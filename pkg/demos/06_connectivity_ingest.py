# %% [markdown]
# # From region time series to connectivity tensors
#
# Each subject is a `p × L` matrix of regional signals. Sliding windows turn it
# into a `p × p × T` stack of Fisher-transformed correlation matrices, which
# can then be clustered like any other tensor sample.

# %%
import tempfile
from pathlib import Path

import numpy as np

from tenmix import HecmConfig, fit, io
from tenmix.ingest import WindowSpec, load_cohort, write_cohort

rng = np.random.default_rng(5)
p, L = 6, 236
raw = Path(tempfile.mkdtemp()) / "raw"
raw.mkdir()
for i in range(40):
    # half of the subjects share a strong common signal in regions 0-2
    x = rng.standard_normal((p, L))
    if i % 2:
        x[:3] += 1.5 * rng.standard_normal(L)
    io.write_matrix_csv(raw / f"sub{i:03d}.csv", x)

# %%
w = WindowSpec(n_windows=3, window_len=20)
cohort = load_cohort(raw, w)
manifest = write_cohort(cohort, raw.parent / "tensors", w, series_len=L)
print(len(cohort), "subjects, tensor dims", cohort[0][1].shape, "starts", manifest["starts"])

# %% [markdown]
# Fit two clusters. Each sample's diagonal is zero, which is fine because the
# model only needs positive-definite residual scatter along every mode.

# %%
data = np.stack([x for _, x in cohort])
res = fit(data, HecmConfig(K=2, R=1, lambda0=0.01, lambda1=0.001))
print("labels:", res.labels)
print("truth: ", np.arange(40) % 2)
