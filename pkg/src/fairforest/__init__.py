"""Decision trees and random forests that penalize splits separating a protected attribute."""

from .criteria import CriterionConfig
from .dataset import BinarizeRecipe, Dataset, FeatureSchema, SubsetView, binarize, load_csv, make_folds
from .errors import FairForestError
from .evaluation import ExperimentSpec, cross_validate, evaluate, holdout, protect_all_features_sweep
from .forest import ForestConfig, ForestModel
from .forest import fit as fit_forest
from .tree import DecisionTree, TreeConfig, induce, print_tree

__version__ = "0.1.0"

__all__ = [
    "BinarizeRecipe", "CriterionConfig", "Dataset", "DecisionTree", "ExperimentSpec",
    "FairForestError", "FeatureSchema", "ForestConfig", "ForestModel", "SubsetView", "TreeConfig",
    "binarize", "cross_validate", "evaluate", "fit_forest", "holdout", "induce", "load_csv",
    "make_folds", "print_tree", "protect_all_features_sweep",
]
