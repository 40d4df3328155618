# %% [markdown]
# # Seeded replication studies
#
# `replicate` draws one `(data_seed, fit_seed)` pair per replication up front,
# so the summary is the same whether the replications run serially or on a
# process pool. The full easy-regime study (n=800, 10 replications) takes a
# few seconds per replication; this demo uses a smaller design.

# %%
from tenmix import HecmConfig, SimDesign
from tenmix import study

design = SimDesign(n=400, dims=(10, 10, 10), K=4, R=4, mu=0.85, nu=0.3)
l0, l1 = study.default_penalties(design.n)
rows, records = study.replicate(design, HecmConfig(K=4, R=4, lambda0=l0, lambda1=l1), 3, seed=1)
for r in rows:
    print(f"{r['metric']:<10} {r['mean']:.3f} ({r['stderr']:.3f})")

# %% [markdown]
# The rate study fits at several sample sizes and regresses log mean CME on
# log n. A slope near -1/2 is the parametric rate.

# %%
rate_rows, slope = study.rate_study([400, 800], design, 2, seed=3)
for r in rate_rows:
    print(r["n"], round(r["cme"], 4))
print("slope:", round(slope, 3))
