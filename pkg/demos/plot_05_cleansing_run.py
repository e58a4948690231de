r"""
One cleansing run
-----------------
The engine evaluates random selections first, then alternates between
refitting the surrogate, sampling its QUBO and evaluating the lowest-energy
unseen sample.
"""
import collections

from qubo_cleanse import EngineConfig, SamplerConfig, generate_dataset, run, theoretical_solution
from qubo_cleanse.experiment import hamming_distance

data = generate_dataset(b=7, n_real=4, n_valid=16, n_test=16, seed=2)
config = EngineConfig(n_init=16, n_total=60, sampler=SamplerConfig(num_reads=128, num_sweeps=500), seed=0)
trace = run(data, config)

#%%
# Sample types in the optimization phase: "optimal" when the accepted
# sample has the lowest energy in its batch, "suboptimal" when better ones
# had already been evaluated, "random" when the whole batch had.
print(collections.Counter(r.sample_type for r in trace.records if r.phase == "optimize"))

#%%
best = trace.best_record
print("best step", best.step, "loss", round(best.raw_loss, 4))
print("selection ", best.accepted)
print("clean     ", theoretical_solution(data))
print("Hamming distance", hamming_distance(best.accepted, theoretical_solution(data)))
