"""Mislabeled-instance removal by QUBO-surrogate black-box optimization."""

from .base_learner import LogisticModel, TrainSettings, log_loss, predict_proba, train
from .bbo_engine import EngineConfig, RunTrace, StepRecord, accept_candidate, evaluate_selection, run, transform_loss
from .experiment import ExperimentConfig, analyze, run_experiment
from .samplers import SampleBatch, SamplerConfig, sa_read, sample, sqa_read
from .surrogate import SurrogateCoefficients, evaluate, expand, fit_ridge, qubo_energy, to_qubo
from .task_data import Dataset, Instance, Split, filter_train, generate_dataset, majority_bit, theoretical_solution

__version__ = "0.1.0"
