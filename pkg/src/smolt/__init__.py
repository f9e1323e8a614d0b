"""Bayesian stock assessment for wild Baltic salmon rivers.

Age-structured sea population with Beverton-Holt smolt production, fitted
to catch, tagging, spawner-count and river survey data by blockwise
adaptive Metropolis. Subpackages follow the pipeline order: priors and
river submodels feed the life-history model, whose posterior drives
forward projection under candidate fishing policies.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .data import Dataset, load_dataset, save_dataset
from .decisions import Policy, compare_policies, moratorium, project, status_quo
from .errors import (ConvergenceError, DomainError, PipelineError, SmoltError,
                     ValidationError)
from .model import LifeHistoryModel, build_model
from .pipeline import PipelineConfig, rerun_from_manifest, run_pipeline
from .simulate import SimulationDesign, make_demo, simulate

__all__ = [
    "BACKEND", "__version__",
    "Dataset", "load_dataset", "save_dataset",
    "Policy", "compare_policies", "moratorium", "project", "status_quo",
    "SmoltError", "DomainError", "ValidationError", "ConvergenceError",
    "PipelineError",
    "LifeHistoryModel", "build_model",
    "PipelineConfig", "run_pipeline", "rerun_from_manifest",
    "SimulationDesign", "simulate", "make_demo",
]
