"""archprobe: DNN architecture identification from aggregate GPU profiles.

The package covers both directions of architecture extraction: predicting
an architecture label from an aggregate profiler log (parse -> featurize
-> classify), and reconstructing a layer graph from a framework profiler
trace. See the command-line interface in ``archprobe.cli``.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .classifiers import ClassRanking, HyperParams, Predictor, predict, rank_classes, train
from .errors import ArchprobeError
from .families import ARCHITECTURES, FAMILIES, family_of
from .features import (
    FeatureId,
    FeatureMatrix,
    FeatureSpace,
    build_feature_space,
    build_matrix,
    fit_scaler,
    select_group,
    vectorize,
)
from .nvprof import load_corpus, parse_duration, parse_log_file, parse_log_text
from .pipeline import (
    AttackModel,
    EvalReport,
    PipelineConfig,
    ablation_run,
    evaluate,
    load_model,
    offline_preprocess,
    predict_architecture,
    ranking_metrics,
    save_model,
    split_corpus,
)
from .profile import (
    AggregateProfile,
    ApiCallStat,
    KernelStat,
    SystemSignalStat,
    canonicalize_kernel_name,
    profile_from_json,
    profile_to_json,
)
from .selection import FeatureRanking, rfe_rank, take_top
from .synth import CorpusLayout, PerturbationSpec, apply_variant, generate_corpus
from .traceparse import LayerGraph, build_tree, emit_code, parse_trace, reconstruct

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "FAMILIES",
    "AggregateProfile",
    "ApiCallStat",
    "ArchprobeError",
    "AttackModel",
    "ClassRanking",
    "CorpusLayout",
    "EvalReport",
    "FeatureId",
    "FeatureMatrix",
    "FeatureRanking",
    "FeatureSpace",
    "HyperParams",
    "KERNEL_BACKEND",
    "KernelStat",
    "LayerGraph",
    "PerturbationSpec",
    "PipelineConfig",
    "Predictor",
    "SystemSignalStat",
    "ablation_run",
    "apply_variant",
    "build_feature_space",
    "build_matrix",
    "build_tree",
    "canonicalize_kernel_name",
    "emit_code",
    "evaluate",
    "family_of",
    "fit_scaler",
    "generate_corpus",
    "load_corpus",
    "load_model",
    "offline_preprocess",
    "parse_duration",
    "parse_log_file",
    "parse_log_text",
    "parse_trace",
    "predict",
    "predict_architecture",
    "profile_from_json",
    "profile_to_json",
    "rank_classes",
    "ranking_metrics",
    "reconstruct",
    "rfe_rank",
    "save_model",
    "select_group",
    "split_corpus",
    "take_top",
    "train",
    "vectorize",
]
