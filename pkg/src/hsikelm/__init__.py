"""Hyperspectral image classification with fused multi-scale structure and
texture features and a swarm-tuned kernel extreme learning machine."""

from .datacube import (
    HyperCube,
    LabelRaster,
    SampleSplit,
    load_cube,
    load_labels,
    save_cube,
    save_labels,
    stratified_split,
)
from .errors import ConfigError, DataError, HsiKelmError, NumericalError
from .kelm import KelmHyperparams, KelmModel, mse_fitness, predict, rbf_kernel, train
from .lbp import LbpConfig, lbp_code, lbp_features
from .metrics import ConfusionMatrix, aa, confusion, kappa, oa
from .mstv import (
    BandGrouping,
    MstvConfig,
    RtvParams,
    group_and_average,
    kpca_reduce,
    mstv_features,
    multiscale_stack,
    rtv_smooth,
)
from .pipeline import (
    PipelineConfig,
    RunReport,
    fuse,
    make_synthetic_cube,
    normalize_features,
    render_map,
    run_full,
)
from .pso import PsoConfig, pso_minimize
from .ssa import SsaConfig, SsaState, SsaResult, optimize, tune_kelm

__version__ = "0.1.0"

__all__ = [
    "HyperCube", "LabelRaster", "SampleSplit", "load_cube", "load_labels",
    "save_cube", "save_labels", "stratified_split",
    "ConfigError", "DataError", "HsiKelmError", "NumericalError",
    "KelmHyperparams", "KelmModel", "mse_fitness", "predict", "rbf_kernel", "train",
    "LbpConfig", "lbp_code", "lbp_features",
    "ConfusionMatrix", "aa", "confusion", "kappa", "oa",
    "BandGrouping", "MstvConfig", "RtvParams", "group_and_average", "kpca_reduce",
    "mstv_features", "multiscale_stack", "rtv_smooth",
    "PipelineConfig", "RunReport", "fuse", "make_synthetic_cube",
    "normalize_features", "render_map", "run_full",
    "PsoConfig", "pso_minimize",
    "SsaConfig", "SsaState", "SsaResult", "optimize", "tune_kelm",
    "__version__",
]
