# %% [markdown]
# # Choosing R, the penalties and K by extended BIC
#
# `tune` runs three passes: rank first with both penalties at their smallest
# values, then `lambda0`, then `lambda1`. `select_k` repeats that for
# each K and keeps the lowest score.

# %%
from tenmix import HecmConfig, SimDesign, generate, select_k, tune

data, labels, truth = generate(SimDesign(n=300, dims=(5, 5, 5), K=2, R=1, seed=8))
grid = {"R": [1, 2], "lambda0": [0.01, 0.1], "lambda1": [0.001, 0.01]}

# %%
best, res, report = tune(data, grid, HecmConfig(K=2, R=1))
for c in report["candidates"]:
    print(c["pass"], c["R"], c["lambda0"], c["lambda1"], round(c["score"], 1))
print("chosen:", report["chosen"], "fits:", report["n_fits"])

# %%
best, res, report = select_k(data, [1, 2, 3], grid, HecmConfig(K=2, R=1))
for row in report["per_K"]:
    print("K =", row["K"], "score", row.get("score"))
print("chosen K:", report["chosen_K"])
