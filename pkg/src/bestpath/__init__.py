"""Best path variable selection on minimal AIC/BIC forests of mixed data."""

__version__ = "0.1.0"

from .compare import Comparison, compare_arms, compare_predictions
from .crossval import CVResult, kfold_cv, kfold_indices, train_test_splits
from .dataset import DataError, Dataset, VariableKind, infer_kind, load_csv, load_hitters
from .forest import Forest, build_forest, components, export_dot, forbidden_paths
from .lasso import LassoFit, lambda_max, lasso_cv, lasso_path
from .linmodel import ModelFit, SingularDesignError, design_matrix, ols_fit
from .mi import MIEstimate, MITable, mi_matrix
from .pathsteps import PathSteps, mi_sum_profile, path_steps
from .selector import SelectConfig, SelectionError, SelectionReport, prune, select

__all__ = [
    "Comparison", "compare_arms", "compare_predictions",
    "CVResult", "kfold_cv", "kfold_indices", "train_test_splits",
    "DataError", "Dataset", "VariableKind", "infer_kind", "load_csv", "load_hitters",
    "Forest", "build_forest", "components", "export_dot", "forbidden_paths",
    "LassoFit", "lambda_max", "lasso_cv", "lasso_path",
    "ModelFit", "SingularDesignError", "design_matrix", "ols_fit",
    "MIEstimate", "MITable", "mi_matrix",
    "PathSteps", "mi_sum_profile", "path_steps",
    "SelectConfig", "SelectionError", "SelectionReport", "prune", "select",
]
