"""Backward elimination of network inputs with surrogate-variable FDR control."""

from .datasets import LabeledDataset, SimSpec, simulate, split, standardize
from .errors import (ConfigError, DataError, SelectionAborted, SurvNetError,
                     TrainingDiverged)
from .fdr import estimate_fdr, min_next_fdr, step_size
from .net import NetworkModel, TrainConfig
from .selection import SelectionReport, run_selection, select_variables

__all__ = [
    "ConfigError", "DataError", "LabeledDataset", "NetworkModel", "SelectionAborted",
    "SelectionReport", "SimSpec", "SurvNetError", "TrainConfig", "TrainingDiverged",
    "estimate_fdr", "min_next_fdr", "run_selection", "select_variables", "simulate",
    "split", "standardize", "step_size",
]
