"""Experiment runner: perturbation scenarios, eta sweeps and the CLI."""
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, Report, execute, run
from .scenarios import (GENERATORS, SlopeFit, SweepResult, UnderflowError, fit_slope,
                        perturbation_generators, sweep_eta)
