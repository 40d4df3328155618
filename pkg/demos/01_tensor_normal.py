# %% [markdown]
# # Tensors and the tensor normal distribution
#
# A sample here is a plain numpy array of shape `(d_0, d_1, d_2)`. Modes are
# numbered from 0 and vectorization is column-major, so the first index moves
# fastest. A tensor normal with mean `U` and per-mode precisions `Ω_m` is a
# Gaussian on `vec(X)` whose precision is `Ω_2 ⊗ Ω_1 ⊗ Ω_0`.

# %%
import numpy as np

from tenmix import tensor as T
from tenmix.tensor_normal import TnParams, log_density, sample

rng = np.random.default_rng(0)
x = T.unvec(np.arange(1.0, 9.0), (2, 2, 2))
print(T.unfold(x, 0))

# %% [markdown]
# Mode products act on one index at a time, and a product over every mode is
# the same as a Kronecker matrix on the vectorized tensor.

# %%
mats = [rng.standard_normal((2, 2)) for _ in range(3)]
lhs = T.vec(T.multi_mode_product(x, mats))
rhs = T.kron_chain(mats) @ T.vec(x)
print("max difference:", np.abs(lhs - rhs).max())

# %% [markdown]
# Draw from a tensor normal with an AR(1)-like precision on mode 0 and check
# the density against the empirical covariance.

# %%
dims = (3, 2, 2)
rho = 0.5
cov0 = rho ** np.abs(np.subtract.outer(np.arange(3), np.arange(3)))
params = TnParams(np.zeros(dims), [np.linalg.inv(cov0), np.eye(2), np.eye(2)])
draws = sample(params, rng, size=20_000)
emp = np.cov(draws.reshape(len(draws), -1, order="F"), rowvar=False)
print("empirical mode-0 covariance:\n", emp[:3, :3].round(2))
print("log density at the mean:", log_density(np.zeros(dims), params))
