"""Experiment harness and the statistics used to read its results."""
from .harness import (ENSEMBLE, ENSEMBLE_TECHNIQUES, LEARNER_TECHNIQUES, TECHNIQUES, ExperimentConfig,
                      resolve_dataset, run_experiment, run_job)
from .report import Comparison, ExperimentReport
from .stats import (WilcoxonResult, accuracy, exact_null_counts, percent_reduction_in_error,
                    wilcoxon_signed_rank, win_tie_loss)

__all__ = [
    "ENSEMBLE", "ENSEMBLE_TECHNIQUES", "LEARNER_TECHNIQUES", "TECHNIQUES",
    "Comparison", "ExperimentConfig", "ExperimentReport", "WilcoxonResult",
    "accuracy", "exact_null_counts", "percent_reduction_in_error", "resolve_dataset",
    "run_experiment", "run_job", "wilcoxon_signed_rank", "win_tie_loss",
]
