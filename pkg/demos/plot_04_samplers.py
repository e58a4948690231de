r"""
Annealing samplers
------------------
Simulated annealing and path-integral simulated quantum annealing both
return a batch of low-energy selections for a QUBO matrix. On a small
problem the exhaustive ground state is available for comparison.
"""
import numpy as np

from qubo_cleanse.samplers import SamplerConfig, brute_force_minimum, sample

rng = np.random.default_rng(3)
U = np.triu(rng.uniform(-1, 1, size=(12, 12)))
q_star, e_star = brute_force_minimum(U)
print("ground state energy", e_star)

#%%
for kind in ("sa", "sqa"):
    batch = sample(U, SamplerConfig(kind=kind, num_reads=64, num_sweeps=500, seed=0))
    print(kind, batch.energies.min(), f"{batch.sampling_time:.3f} s")

#%%
# The per-read energies form a distribution; on a larger problem its mean
# drops and its spread narrows as the number of sweeps grows.
V = np.triu(rng.uniform(-1, 1, size=(64, 64)))
for sweeps in (1, 10, 100, 1000):
    e = sample(V, SamplerConfig(kind="sa", num_reads=64, num_sweeps=sweeps, seed=0)).energies
    print(sweeps, round(e.mean(), 3), round(e.std(), 3))
