r"""
Validation loss of a selection
------------------------------
The black-box objective trains a small logistic regression on the selected
training instances and reports its log-loss on the clean validation split.
"""
import math

import numpy as np

from qubo_cleanse import TrainSettings, evaluate_selection, generate_dataset, theoretical_solution

data = generate_dataset(b=7, n_real=16, n_valid=32, n_test=32, seed=0)
settings = TrainSettings()

#%%
# Keeping nothing leaves the untrained model, which predicts 0.5 everywhere.
print(evaluate_selection(np.zeros(data.n, dtype=np.uint8), data, settings), math.log(2))

#%%
# Keeping everything pairs every input with both labels; the model learns
# almost nothing. Keeping only the real half does much better.
print("all", evaluate_selection(np.ones(data.n, dtype=np.uint8), data, settings))
print("clean", evaluate_selection(theoretical_solution(data), data, settings))

#%%
# A few random selections for scale.
rng = np.random.default_rng(0)
print([round(evaluate_selection(rng.integers(0, 2, data.n), data, settings), 3) for _ in range(5)])
