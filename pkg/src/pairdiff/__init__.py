"""Pairwise difference learning for classification.

Reduces any K-class problem to a single binary "same class?" problem over
instance pairs, predicts by averaging per-anchor Bayesian posterior updates,
and decomposes predictive uncertainty into aleatoric and epistemic parts.
"""

__version__ = "0.1.0"

from .base_learners import (
    DecisionTreeClassifier,
    ForestClassifier,
    KnnClassifier,
    TreeNode,
    fit_tree,
    gini_impurity,
    make_base_learner,
    predict_tree,
)
from .data import (
    ClassPrior,
    ColumnSchema,
    DataError,
    Preprocessor,
    ProcessedDataset,
    RawDataset,
    class_prior,
    fit_preprocessor,
    load_csv,
    transform,
)
from .evaluation import (
    AnchorCurve,
    ComparisonReport,
    CvConfig,
    EstimatorSpec,
    FoldResult,
    anchor_effect_curve,
    compare,
    macro_f1,
    overfit_report,
    run_cv,
    stratified_kfold,
    students_t_test,
)
from .pairing import (
    DegenerateDatasetError,
    PairDataset,
    build_pair_dataset,
    joint_features,
)
from .pdc import PdcClassifier, PdcConfig, posterior_for_anchor
from .uncertainty import UncertaintyReport, shannon_entropy, uncertainty_report

__all__ = [
    "AnchorCurve",
    "ClassPrior",
    "ColumnSchema",
    "ComparisonReport",
    "CvConfig",
    "DataError",
    "DecisionTreeClassifier",
    "DegenerateDatasetError",
    "EstimatorSpec",
    "FoldResult",
    "ForestClassifier",
    "KnnClassifier",
    "PairDataset",
    "PdcClassifier",
    "PdcConfig",
    "Preprocessor",
    "ProcessedDataset",
    "RawDataset",
    "TreeNode",
    "UncertaintyReport",
    "anchor_effect_curve",
    "build_pair_dataset",
    "class_prior",
    "compare",
    "fit_preprocessor",
    "fit_tree",
    "gini_impurity",
    "joint_features",
    "load_csv",
    "macro_f1",
    "make_base_learner",
    "overfit_report",
    "posterior_for_anchor",
    "predict_tree",
    "run_cv",
    "shannon_entropy",
    "stratified_kfold",
    "students_t_test",
    "transform",
    "uncertainty_report",
]
