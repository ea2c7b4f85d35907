"""End-to-end orchestration: features, tuning, training, evaluation, artifacts.

A run loads a cube and its labels, extracts spectral features (grouping +
multi-scale smoothing + kernel PCA) and spatial features (per-pixel LBP
codes), fuses them, splits the labeled pixels, tunes the classifier's
(C, gamma) with the swarm optimizer unless fixed values are supplied,
trains, evaluates on the held-out pixels, and writes a report JSON,
confusion CSV, classification map PPM, and (when tuned) a convergence
trace CSV into the output directory. Report artifact paths are relative
to the output directory and the config echo omits it, so two runs with
the same seed are byte-identical in canonical mode (which zeroes the
timing fields) even when written to different directories.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kelm, metrics, ssa
from .datacube import (
    HyperCube,
    LabelRaster,
    check_companion,
    load_cube,
    load_labels,
    stratified_split,
)
from .errors import ConfigError, DataError, HsiKelmError
from .lbp import LbpConfig, lbp_features
from .mstv import (
    MstvConfig,
    RtvParams,
    group_and_average,
    kpca_reduce,
    multiscale_stack,
    scale_bands_unit,
)

LBP_SOURCES = ("grouped", "spectral")

# one fixed color per class id (1-based); class 0 renders black
PALETTE = (
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
    (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212),
    (0, 128, 128), (220, 190, 255), (170, 110, 40), (255, 250, 200), (128, 0, 0),
    (170, 255, 195), (128, 128, 0), (255, 215, 180), (0, 0, 128), (128, 128, 128),
    (255, 255, 255),
)

REPORT_NAME = "run_report.json"
CONFUSION_NAME = "confusion.csv"
MAP_NAME = "classification_map.ppm"
TRACE_NAME = "ssa_trace.csv"


@dataclass(frozen=True)
class PipelineConfig:
    cube_path: str
    label_path: str
    num_classes: int
    train_fraction: float = 0.1
    folds: int = 5
    seed: int = 0
    output_dir: str = "out"
    lbp_source: str = "grouped"
    mstv: MstvConfig = field(default_factory=MstvConfig)
    lbp: LbpConfig = field(default_factory=LbpConfig)
    ssa: ssa.SsaConfig = field(default_factory=ssa.default_tuning_config)
    fixed_hyperparams: kelm.KelmHyperparams | None = None
    canonical: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must lie in (0, 1); {self.train_fraction} leaves an empty test split"
            )
        if self.num_classes < 1:
            raise ConfigError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.folds < 1:
            raise ConfigError(f"folds must be >= 1, got {self.folds}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.lbp_source not in LBP_SOURCES:
            raise ConfigError(f"lbp_source must be one of {LBP_SOURCES}, got {self.lbp_source!r}")


def _take(section: dict, allowed: set[str], where: str) -> dict:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} config key(s): {sorted(unknown)}")
    return section


def config_from_dict(raw: dict) -> PipelineConfig:
    """Build a validated config from a JSON-style dict; unknown keys fail."""
    top = {
        "cube_path", "label_path", "num_classes", "train_fraction", "folds", "seed",
        "output_dir", "lbp_source", "mstv", "lbp", "ssa", "fixed_hyperparams", "canonical",
    }
    _take(raw, top, "top-level")
    for key in ("cube_path", "label_path", "num_classes"):
        if key not in raw:
            raise ConfigError(f"missing required config key: {key}")
    master_seed = int(raw.get("seed", 0))

    mstv_raw = dict(raw.get("mstv", {}))
    _take(mstv_raw, {"k", "scales", "n_components", "kpca_gamma", "landmark_count", "seed"}, "mstv")
    if "scales" in mstv_raw:
        scales = []
        for entry in mstv_raw["scales"]:
            entry = dict(entry)
            _take(entry, {"lam", "sigma", "iterations", "epsilon_s", "epsilon_l"}, "mstv scale")
            scales.append(RtvParams(**entry))
        mstv_raw["scales"] = tuple(scales)
    mstv_raw.setdefault("seed", master_seed)
    mstv_cfg = MstvConfig(**mstv_raw)

    lbp_raw = dict(raw.get("lbp", {}))
    _take(lbp_raw, {"neighbors", "radius", "replicate_border"}, "lbp")
    lbp_cfg = LbpConfig(**lbp_raw)

    ssa_raw = dict(raw.get("ssa", {}))
    _take(
        ssa_raw,
        {"pop_size", "max_iter", "producer_ratio", "scout_ratio", "safety_threshold",
         "seed", "paper_literal_v", "log10_c_bounds", "log10_gamma_bounds"},
        "ssa",
    )
    c_bounds = tuple(ssa_raw.pop("log10_c_bounds", ssa.DEFAULT_LOG10_C_BOUNDS))
    g_bounds = tuple(ssa_raw.pop("log10_gamma_bounds", ssa.DEFAULT_LOG10_GAMMA_BOUNDS))
    ssa_raw.setdefault("seed", master_seed)
    ssa_cfg = ssa.SsaConfig(
        lower=np.array([c_bounds[0], g_bounds[0]], dtype=np.float64),
        upper=np.array([c_bounds[1], g_bounds[1]], dtype=np.float64),
        **ssa_raw,
    )

    fixed = raw.get("fixed_hyperparams")
    if fixed is not None:
        fixed = dict(fixed)
        _take(fixed, {"c", "gamma"}, "fixed_hyperparams")
        fixed = kelm.KelmHyperparams(**fixed)

    return PipelineConfig(
        cube_path=str(raw["cube_path"]),
        label_path=str(raw["label_path"]),
        num_classes=int(raw["num_classes"]),
        train_fraction=float(raw.get("train_fraction", 0.1)),
        folds=int(raw.get("folds", 5)),
        seed=master_seed,
        output_dir=str(raw.get("output_dir", "out")),
        lbp_source=str(raw.get("lbp_source", "grouped")),
        mstv=mstv_cfg,
        lbp=lbp_cfg,
        ssa=ssa_cfg,
        fixed_hyperparams=fixed,
        canonical=bool(raw.get("canonical", False)),
    )


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing config file: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return config_from_dict(raw)


def config_echo_dict(config: PipelineConfig) -> dict:
    """Semantic config as a plain dict; excludes the run-local output_dir."""
    return {
        "cube_path": config.cube_path,
        "label_path": config.label_path,
        "num_classes": config.num_classes,
        "train_fraction": config.train_fraction,
        "folds": config.folds,
        "seed": config.seed,
        "lbp_source": config.lbp_source,
        "canonical": config.canonical,
        "mstv": {
            "k": config.mstv.k,
            "scales": [
                {"lam": s.lam, "sigma": s.sigma, "iterations": s.iterations,
                 "epsilon_s": s.epsilon_s, "epsilon_l": s.epsilon_l}
                for s in config.mstv.scales
            ],
            "n_components": config.mstv.n_components,
            "kpca_gamma": config.mstv.kpca_gamma,
            "landmark_count": config.mstv.landmark_count,
            "seed": config.mstv.seed,
        },
        "lbp": {"neighbors": config.lbp.neighbors, "radius": config.lbp.radius},
        "ssa": {
            "pop_size": config.ssa.pop_size,
            "max_iter": config.ssa.max_iter,
            "producer_ratio": config.ssa.producer_ratio,
            "scout_ratio": config.ssa.scout_ratio,
            "safety_threshold": config.ssa.safety_threshold,
            "seed": config.ssa.seed,
            "paper_literal_v": config.ssa.paper_literal_v,
            "log10_c_bounds": config.ssa.lower[0:1].tolist() + config.ssa.upper[0:1].tolist(),
            "log10_gamma_bounds": config.ssa.lower[1:2].tolist() + config.ssa.upper[1:2].tolist(),
        },
        "fixed_hyperparams": (
            None if config.fixed_hyperparams is None
            else {"c": config.fixed_hyperparams.c, "gamma": config.fixed_hyperparams.gamma}
        ),
    }


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except HsiKelmError as e:
        raise type(e)(f"stage {name}: {e}") from e
    except Exception as e:
        raise RuntimeError(f"stage {name}: {e}") from e
    finally:
        timings[name] = timings.get(name, 0.0) + (time.perf_counter() - start)


def normalize_features(features: np.ndarray) -> np.ndarray:
    """Min-max each column to [0, 1]; constant columns map to 0."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {f.shape}")
    if f.size and not np.all(np.isfinite(f)):
        raise DataError("non-finite value in feature matrix")
    lo = f.min(axis=0)
    span = f.max(axis=0) - lo
    span[span == 0] = 1.0
    return (f - lo) / span


def fuse(spectral: np.ndarray, spatial: np.ndarray) -> np.ndarray:
    """Row-wise concatenation with the spectral block first."""
    spectral = np.asarray(spectral, dtype=np.float64)
    spatial = np.asarray(spatial, dtype=np.float64)
    if spectral.shape[0] != spatial.shape[0]:
        raise DataError(
            f"pixel count mismatch: spectral {spectral.shape[0]} vs spatial {spatial.shape[0]}"
        )
    return np.hstack([spectral, spatial])


@dataclass
class FeatureBundle:
    cube: HyperCube
    labels: LabelRaster
    fused: np.ndarray
    spectral_dim: int
    spatial_dim: int


def build_features(config: PipelineConfig, timings: dict | None = None) -> FeatureBundle:
    """Load data and produce the fused per-pixel feature matrix."""
    timings = {} if timings is None else timings
    with _stage("load", timings):
        cube = load_cube(config.cube_path)
        labels = load_labels(config.label_path, config.num_classes)
        check_companion(cube, labels)
    with _stage("group", timings):
        reduced = group_and_average(cube, config.mstv.k)
    with _stage("mstv", timings):
        stacked = multiscale_stack(scale_bands_unit(reduced), config.mstv.scales)
        spectral = kpca_reduce(stacked, config.mstv)
    with _stage("lbp", timings):
        if config.lbp_source == "grouped":
            source = reduced
        else:
            source = HyperCube(
                spectral.reshape(cube.height, cube.width, spectral.shape[1]).astype(np.float32)
            )
        spatial = lbp_features(source, config.lbp)
    with _stage("fuse", timings):
        fused = fuse(normalize_features(spectral), spatial)
    return FeatureBundle(
        cube=cube,
        labels=labels,
        fused=fused,
        spectral_dim=spectral.shape[1],
        spatial_dim=spatial.shape[1],
    )


def make_synthetic_cube(
    height: int, width: int, bands: int, num_classes: int, noise_sigma: float, seed: int
) -> tuple[HyperCube, LabelRaster]:
    """Class-striped fixture: smooth per-class spectra, a per-class
    checkerboard texture modulation, and i.i.d. Gaussian noise."""
    if min(height, width, bands) < 1:
        raise ConfigError(f"invalid dimensions {height}x{width}x{bands}")
    if not 1 <= num_classes <= height:
        raise ConfigError(f"num_classes must lie in 1..height={height}, got {num_classes}")
    if noise_sigma < 0:
        raise ConfigError(f"noise_sigma must be >= 0, got {noise_sigma}")
    rng = np.random.default_rng(seed)
    rows = np.arange(height)
    stripe = np.minimum((rows * num_classes) // height, num_classes - 1)
    labels = np.broadcast_to((stripe + 1)[:, None], (height, width)).astype(np.uint16)

    grid = np.linspace(0.0, 1.0, bands)
    centers = (np.arange(num_classes) + 0.5) / num_classes
    signatures = 0.2 + 0.8 * np.exp(-((grid[None, :] - centers[:, None]) ** 2) / (2 * 0.12**2))
    checker = ((rows[:, None] + np.arange(width)[None, :]) % 2).astype(np.float64) * 2.0 - 1.0
    amplitude = 0.08 * (1 + np.arange(num_classes) % 3) / 3.0
    values = signatures[stripe][:, None, :] * (1.0 + amplitude[stripe][:, None] * checker)[:, :, None]
    if noise_sigma > 0:
        values = values + rng.normal(0.0, noise_sigma, size=values.shape)
    return HyperCube(values.astype(np.float32)), LabelRaster(labels.copy(), num_classes)


def render_map(pred_labels: np.ndarray, path, palette=None) -> None:
    """Write a binary P6 PPM: one palette color per class, black for 0."""
    arr = np.asarray(pred_labels)
    if arr.ndim != 2:
        raise DataError(f"prediction raster must be 2-D, got shape {arr.shape}")
    if arr.size and arr.min() < 0:
        raise DataError("prediction raster contains negative labels")
    colors = tuple(palette) if palette is not None else PALETTE
    h, w = arr.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    for v in np.unique(arr):
        if v == 0:
            continue
        img[arr == v] = colors[(int(v) - 1) % len(colors)]
    header = f"P6\n{w} {h}\n255\n".encode()
    Path(path).write_bytes(header + img.tobytes())


@dataclass
class RunReport:
    oa: float
    aa: float
    kappa: float
    train_time_s: float
    total_time_s: float
    per_stage_times_s: dict
    chosen_hyperparams: kelm.KelmHyperparams
    ssa_trace_path: str | None
    confusion_path: str
    map_path: str
    seed: int
    config_echo: dict

    def to_json(self, canonical: bool = False) -> str:
        stages = dict(self.per_stage_times_s)
        if canonical:
            stages = {k: 0.0 for k in stages}
        doc = {
            "oa": self.oa,
            "aa": self.aa,
            "kappa": self.kappa,
            "train_time_s": 0.0 if canonical else self.train_time_s,
            "total_time_s": 0.0 if canonical else self.total_time_s,
            "per_stage_times_s": stages,
            "chosen_hyperparams": {
                "c": self.chosen_hyperparams.c,
                "gamma": self.chosen_hyperparams.gamma,
            },
            "ssa_trace_path": self.ssa_trace_path,
            "confusion_path": self.confusion_path,
            "map_path": self.map_path,
            "seed": self.seed,
            "config_echo": self.config_echo,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def run_full(config: PipelineConfig) -> RunReport:
    """Execute every stage and write all artifacts into the output directory."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings: dict = {}
    t0 = time.perf_counter()

    bundle = build_features(config, timings)
    labels_flat = bundle.labels.labels.ravel().astype(np.int64)

    with _stage("split", timings):
        split = stratified_split(bundle.labels, config.train_fraction, config.seed)
        if split.test_idx.size == 0:
            raise DataError("empty test split")
    train_x = bundle.fused[split.train_idx]
    train_y = labels_flat[split.train_idx]

    tune_result = None
    if config.fixed_hyperparams is not None:
        chosen = config.fixed_hyperparams
    else:
        with _stage("tune", timings):
            tune_result = ssa.tune_kelm(train_x, train_y, config.ssa, folds=config.folds)
            chosen = tune_result.hyper

    with _stage("train", timings):
        model = kelm.train(train_x, train_y, chosen, num_classes=config.num_classes)

    with _stage("predict", timings):
        labeled = bundle.labels.labeled_indices()
        _, pred_labeled = kelm.predict(model, bundle.fused[labeled])
        pred_map = np.zeros(labels_flat.size, dtype=np.int64)
        pred_map[labeled] = pred_labeled
        pred_test = pred_map[split.test_idx]

    with _stage("evaluate", timings):
        cm = metrics.confusion(labels_flat[split.test_idx], pred_test, config.num_classes)
        oa_v, aa_v, kappa_v = metrics.oa(cm), metrics.aa(cm), metrics.kappa(cm)

    with _stage("emit", timings):
        metrics.write_confusion_csv(cm, out_dir / CONFUSION_NAME)
        render_map(pred_map.reshape(bundle.labels.labels.shape), out_dir / MAP_NAME)
        trace_path = None
        if tune_result is not None:
            ssa.write_trace_csv(out_dir / TRACE_NAME, tune_result.trace_best, tune_result.trace_mean)
            trace_path = TRACE_NAME

    total = time.perf_counter() - t0
    report = RunReport(
        oa=oa_v,
        aa=aa_v,
        kappa=kappa_v,
        train_time_s=timings.get("tune", 0.0) + timings["train"],
        total_time_s=total,
        per_stage_times_s=timings,
        chosen_hyperparams=chosen,
        ssa_trace_path=trace_path,
        confusion_path=CONFUSION_NAME,
        map_path=MAP_NAME,
        seed=config.seed,
        config_echo=config_echo_dict(config),
    )
    (out_dir / REPORT_NAME).write_text(report.to_json(canonical=config.canonical))
    return report
