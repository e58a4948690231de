r"""
Experiments and analysis
------------------------
An experiment repeats the run over several seeds on one dataset and writes
per-run traces plus aggregate tables. The same is available from the shell
as ``qubo-cleanse run`` and ``qubo-cleanse analyze``.
"""
import tempfile
from pathlib import Path

from qubo_cleanse.experiment import ExperimentConfig, analyze_directory, run_experiment

config = ExperimentConfig.from_text("""
b = 7
n_real = 4
n_valid = 16
n_test = 16
dataset_seed = 2
n_init = 16
n_total = 48
num_reads = 64
num_sweeps = 300
seeds = 0-3
""")
out = Path(tempfile.mkdtemp())
summary = run_experiment(config, out)
print(sorted(p.name for p in out.iterdir()))

#%%
# Removal probability per training instance: fakes (second half) should be
# removed far more often than reals.
print(summary.removal_probability.round(2))

#%%
# Losses of the model trained on each run's best subset.
for split, values in summary.split_losses.items():
    print(split, values.mean().round(4))

#%%
# Aggregates can be rebuilt from the stored traces alone.
again = analyze_directory(out)
print((again.removal_probability == summary.removal_probability).all())
