r"""
Noisy majority-bit data
-----------------------
The task is to predict whether a binary input has more ones than zeros. The
training set is deliberately contaminated: every correctly labelled (real)
instance is followed, in the second half of the set, by a copy of the same
input carrying the minority label (a fake).
"""
import numpy as np

from qubo_cleanse import generate_dataset, theoretical_solution

data = generate_dataset(b=7, n_real=8, n_valid=16, n_test=16, seed=0)
print(data.train.inputs.shape, data.valid.inputs.shape, data.test.inputs.shape)

#%%
# Real instances come first. Each fake reuses the input of the real instance
# at the same offset but flips its label.
n_real = data.n // 2
for i in range(3):
    print(data.train.inputs[i], data.train.labels[i], "|", data.train.labels[n_real + i])

#%%
# A selection vector has one bit per training instance. The selection that
# keeps exactly the real half is the cleansing target.
clean = theoretical_solution(data)
print(clean)

#%%
# Validation and test inputs never overlap with training inputs.
seen = {tuple(x) for x in data.train.inputs[:n_real]}
print(any(tuple(x) in seen for x in np.vstack([data.valid.inputs, data.test.inputs])))
