r"""
Quadratic surrogate and its QUBO
--------------------------------
Each evaluated selection is expanded into ``[1, q, q_i q_j]`` features and
a ridge regression maps those features to the transformed loss. Dropping the
constant leaves an upper-triangular QUBO matrix.
"""
import numpy as np

from qubo_cleanse.surrogate import SurrogateCoefficients, evaluate, expand_many, fit_ridge, n_params, to_qubo

n = 6
rng = np.random.default_rng(1)
truth = SurrogateCoefficients.from_vector(rng.normal(size=n_params(n)), n)

#%%
# Fit on 40 distinct selections with an almost vanishing penalty and compare
# against the planted coefficients.
idx = rng.choice(2**n, size=40, replace=False)
Q = ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)
y = np.array([evaluate(truth, q) for q in Q])
fitted = fit_ridge(expand_many(Q), y, lam=1e-10)
print(np.abs(fitted.as_vector() - truth.as_vector()).max())

#%%
# The QUBO form agrees with the feature form up to the constant.
U = to_qubo(fitted)
q = Q[0].astype(float)
print(evaluate(fitted, Q[0]), fitted.alpha0 + q @ U @ q)
