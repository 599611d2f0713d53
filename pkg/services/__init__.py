"""
Services package initialization.
"""

from services.solver_service import PerturbationResult, pgd_solve, random_perturb, trs_solve
from services.fairness_service import FairnessReport, UNDEFINED, fairness_report
from services.data_service import TabularDataset, generate_unfair2d, load_csv
from services.trainer_service import TrainHistory, evaluate, train

__all__ = [
    "PerturbationResult",
    "pgd_solve",
    "random_perturb",
    "trs_solve",
    "FairnessReport",
    "UNDEFINED",
    "fairness_report",
    "TabularDataset",
    "generate_unfair2d",
    "load_csv",
    "TrainHistory",
    "evaluate",
    "train"
]
