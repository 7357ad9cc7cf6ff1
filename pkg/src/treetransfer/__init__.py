"""Random forests and model-transfer algorithms for shifted target domains."""

from .baselines import bias, prune, relabel, src_only, tgt_only
from .data import CATEGORICAL, NUMERIC, Dataset, Feature, Schema, SchemaError
from .experiment import ExperimentConfig, TransferReport, run_experiment
from .forest import (
    Forest,
    InductionConfig,
    LabelDistribution,
    TreeNode,
    build_forest,
    build_tree,
    entropy,
    information_gain,
    predict,
    predict_batch,
)
from .metrics import balanced_error_rate, error_rate
from .mix import EnsembleDiagnostics, ensemble_diagnostics, margin_cdf, mix
from .ser import ser_forest, ser_tree
from .serialize import ModelFormatError, deserialize, serialize
from .strut import divergence_gain, jsd, strut_forest, strut_tree, threshold_selection
from .synthetic import CHALLENGES, ChallengeSpec, generate
from .tabular import SplitRule, load_csv, split_by_feature, stratified_sample

__all__ = [
    "CATEGORICAL",
    "CHALLENGES",
    "ChallengeSpec",
    "Dataset",
    "EnsembleDiagnostics",
    "ExperimentConfig",
    "Feature",
    "Forest",
    "InductionConfig",
    "LabelDistribution",
    "ModelFormatError",
    "NUMERIC",
    "Schema",
    "SchemaError",
    "SplitRule",
    "TransferReport",
    "TreeNode",
    "balanced_error_rate",
    "bias",
    "build_forest",
    "build_tree",
    "deserialize",
    "divergence_gain",
    "ensemble_diagnostics",
    "entropy",
    "error_rate",
    "generate",
    "information_gain",
    "jsd",
    "load_csv",
    "margin_cdf",
    "mix",
    "predict",
    "predict_batch",
    "prune",
    "relabel",
    "run_experiment",
    "ser_forest",
    "ser_tree",
    "serialize",
    "split_by_feature",
    "src_only",
    "stratified_sample",
    "strut_forest",
    "strut_tree",
    "tgt_only",
    "threshold_selection",
]
