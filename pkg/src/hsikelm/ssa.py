"""Sparrow-style swarm optimizer with producer, joiner, and scout roles.

One iteration proposes candidate positions role by role, evaluates them,
and then applies greedy replacement: an individual's retained position is
swapped for its candidate only when the candidate's fitness is strictly
better. The retained set therefore only improves, so the best-so-far
trace is non-increasing.

Randomness contract: a master seed plus a (iteration, role) counter
scheme select an independent substream per role per iteration; inside a
role, draws happen in fitness-rank order before any objective evaluation
is dispatched. Draw order per role:

* producers: one warning level R2, then per producer either one U(0,1)
  step factor (R2 < ST) or one N(0,1) offset (R2 >= ST);
* joiners: per worse-half joiner one N(0,1) scale; per better-half
  joiner one d-vector of +-1 signs;
* scouts: one permutation picking the scouts, then per scout either a
  d-vector of N(0,1) steps (worse than the global best) or one U(-1,1)
  step (at the global best).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kelm
from .errors import ConfigError, DataError, NumericalError

DELTA = 1e-50
_INIT, _PRODUCERS, _JOINERS, _SCOUTS = 0, 1, 2, 3

DEFAULT_LOG10_C_BOUNDS = (-2.0, 4.0)
DEFAULT_LOG10_GAMMA_BOUNDS = (-3.0, 3.0)


@dataclass(frozen=True)
class SsaConfig:
    lower: np.ndarray
    upper: np.ndarray
    pop_size: int = 30
    max_iter: int = 20
    producer_ratio: float = 0.2
    scout_ratio: float = 0.1
    safety_threshold: float = 0.8
    seed: int = 0
    paper_literal_v: bool = False

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64).ravel()
        upper = np.asarray(self.upper, dtype=np.float64).ravel()
        if lower.size == 0 or lower.shape != upper.shape:
            raise ConfigError(f"bounds must be equal-length vectors, got {lower.shape} vs {upper.shape}")
        if np.any(lower > upper):
            raise ConfigError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.pop_size < 2:
            raise ConfigError(f"pop_size must be >= 2, got {self.pop_size}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0.0 < self.producer_ratio < 1.0:
            raise ConfigError(f"producer_ratio must lie in (0,1), got {self.producer_ratio}")
        if not 0.0 < self.scout_ratio < 1.0:
            raise ConfigError(f"scout_ratio must lie in (0,1), got {self.scout_ratio}")
        if not 0.0 < self.safety_threshold < 1.0:
            raise ConfigError(f"safety_threshold must lie in (0,1), got {self.safety_threshold}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def producer_count(self) -> int:
        return min(self.pop_size - 1, max(1, round(self.producer_ratio * self.pop_size)))

    @property
    def scout_count(self) -> int:
        return min(self.pop_size, max(1, round(self.scout_ratio * self.pop_size)))


@dataclass
class SsaState:
    """Retained positions/fitness plus the current iteration's candidates."""

    positions: np.ndarray  # (n, d) retained (greedily accepted) positions
    fitness: np.ndarray  # (n,)
    candidates: np.ndarray  # (n, d) proposals for the running iteration
    cand_fitness: np.ndarray  # (n,)
    best_pos: np.ndarray
    best_fit: float
    worst_pos: np.ndarray
    worst_fit: float
    iteration: int = 0
    scout_rows: np.ndarray | None = field(default=None)


def _phase_rng(seed: int, iteration: int, phase: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(iteration, phase)))


def _ranks(state: SsaState) -> np.ndarray:
    return np.argsort(state.fitness, kind="stable")


def _clip(x, cfg: SsaConfig) -> np.ndarray:
    return np.clip(x, cfg.lower, cfg.upper)


def init_state(obj, cfg: SsaConfig) -> SsaState:
    rng = _phase_rng(cfg.seed, 0, _INIT)
    pos = cfg.lower + (cfg.upper - cfg.lower) * rng.uniform(size=(cfg.pop_size, cfg.dim))
    fit = np.array([_evaluate(obj, p) for p in pos])
    best = int(np.argmin(fit))
    worst = int(np.argmax(fit))
    return SsaState(
        positions=pos,
        fitness=fit,
        candidates=pos.copy(),
        cand_fitness=fit.copy(),
        best_pos=pos[best].copy(),
        best_fit=float(fit[best]),
        worst_pos=pos[worst].copy(),
        worst_fit=float(fit[worst]),
    )


def begin_iteration(state: SsaState) -> None:
    state.candidates[:] = state.positions
    state.cand_fitness[:] = state.fitness
    state.scout_rows = None


def update_producers(state: SsaState, cfg: SsaConfig, rng) -> SsaState:
    """Move the best-ranked fraction: contract multiplicatively while safe,
    otherwise take a shared normal step in every dimension."""
    order = _ranks(state)
    r2 = rng.uniform()
    for rank0, i in enumerate(order[: cfg.producer_count]):
        c = rank0 + 1
        if r2 < cfg.safety_threshold:
            a = rng.uniform()
            factor = 0.0 if a == 0.0 else np.exp(-c / (a * cfg.max_iter))
            cand = state.positions[i] * factor
        else:
            cand = state.positions[i] + rng.standard_normal()
        state.candidates[i] = _clip(cand, cfg)
    return state


def update_joiners(state: SsaState, cfg: SsaConfig, rng) -> SsaState:
    """Move the remaining ranks: the worse half scatters relative to the
    worst position, the better half gathers at the best producer candidate."""
    order = _ranks(state)
    n, d = state.positions.shape
    producers = order[: cfg.producer_count]
    best_producer = producers[int(np.argmin(state.cand_fitness[producers]))]
    d_f = state.candidates[best_producer]
    for rank0, i in enumerate(order[cfg.producer_count :], start=cfg.producer_count):
        c = rank0 + 1
        if c > n / 2:
            q = rng.standard_normal()
            cand = q * np.exp((state.worst_pos - state.positions[i]) / (c * c))
        else:
            signs = rng.integers(0, 2, size=d) * 2 - 1
            step = float(np.abs(state.positions[i] - d_f) @ signs) / d
            cand = d_f + step
        state.candidates[i] = _clip(cand, cfg)
    return state


def update_scouts(state: SsaState, cfg: SsaConfig, rng) -> SsaState:
    """Move a random subset: anyone worse than the global best jumps toward
    it; the global best itself takes a fitness-scaled step."""
    n, d = state.positions.shape
    rows = rng.permutation(n)[: cfg.scout_count]
    for i in rows:
        if state.fitness[i] > state.best_fit:
            if cfg.paper_literal_v:
                v = rng.integers(0, 2, size=d).astype(np.float64)
            else:
                v = rng.standard_normal(d)
            cand = state.best_pos + v * np.abs(state.positions[i] - state.best_pos)
        else:
            o = rng.uniform(-1.0, 1.0)
            gap = np.abs(state.positions[i] - state.worst_pos)
            cand = state.positions[i] + o * (gap / ((state.fitness[i] - state.worst_fit) + DELTA))
        state.candidates[i] = _clip(cand, cfg)
    state.scout_rows = np.asarray(rows)
    return state


def greedy_replace(state: SsaState) -> None:
    """Keep each candidate only if it strictly improves, then refresh the
    best-so-far and current-worst trackers."""
    improved = state.cand_fitness < state.fitness
    state.positions[improved] = state.candidates[improved]
    state.fitness[improved] = state.cand_fitness[improved]
    b = int(np.argmin(state.fitness))
    if state.fitness[b] < state.best_fit:
        state.best_fit = float(state.fitness[b])
        state.best_pos = state.positions[b].copy()
    w = int(np.argmax(state.fitness))
    state.worst_fit = float(state.fitness[w])
    state.worst_pos = state.positions[w].copy()
    state.iteration += 1


def _evaluate(obj, pos: np.ndarray) -> float:
    value = float(obj(pos))
    if np.isnan(value):
        raise NumericalError(f"objective returned NaN at position {pos.tolist()}")
    return value


@dataclass(frozen=True)
class SsaResult:
    best_pos: np.ndarray
    best_fit: float
    trace_best: list[float]
    trace_mean: list[float]


def optimize(obj, cfg: SsaConfig, on_iteration=None) -> SsaResult:
    """Run the full loop: init, rank, role updates, greedy replacement.

    ``on_iteration(state)`` is invoked after every iteration (useful for
    instrumentation). Deterministic for a fixed config seed.
    """
    state = init_state(obj, cfg)
    trace_best, trace_mean = [], []
    for t in range(1, cfg.max_iter + 1):
        begin_iteration(state)
        order = _ranks(state)
        producers = order[: cfg.producer_count]
        joiners = order[cfg.producer_count :]

        update_producers(state, cfg, _phase_rng(cfg.seed, t, _PRODUCERS))
        for i in producers:
            state.cand_fitness[i] = _evaluate(obj, state.candidates[i])

        update_joiners(state, cfg, _phase_rng(cfg.seed, t, _JOINERS))
        for i in joiners:
            state.cand_fitness[i] = _evaluate(obj, state.candidates[i])

        update_scouts(state, cfg, _phase_rng(cfg.seed, t, _SCOUTS))
        for i in state.scout_rows:
            state.cand_fitness[i] = _evaluate(obj, state.candidates[i])

        greedy_replace(state)
        trace_best.append(state.best_fit)
        trace_mean.append(float(state.fitness.mean()))
        if on_iteration is not None:
            on_iteration(state)
    return SsaResult(
        best_pos=state.best_pos.copy(),
        best_fit=state.best_fit,
        trace_best=trace_best,
        trace_mean=trace_mean,
    )


def write_trace_csv(path, trace_best, trace_mean) -> None:
    """CSV convergence trace: iteration, best fitness, population mean."""
    lines = ["iteration,best_fit,mean_fit"]
    for i, (b, m) in enumerate(zip(trace_best, trace_mean), start=1):
        lines.append(f"{i},{b!r},{m!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def default_tuning_config(seed: int = 0, **overrides) -> SsaConfig:
    """2-D search space over (log10 C, log10 gamma)."""
    return SsaConfig(
        lower=np.array([DEFAULT_LOG10_C_BOUNDS[0], DEFAULT_LOG10_GAMMA_BOUNDS[0]]),
        upper=np.array([DEFAULT_LOG10_C_BOUNDS[1], DEFAULT_LOG10_GAMMA_BOUNDS[1]]),
        seed=seed,
        **overrides,
    )


def stratified_fold_ids(labels, folds: int, seed: int) -> tuple[int, np.ndarray]:
    """Assign each sample to a fold, round-robin per shuffled class.

    Folds are reduced (with a warning) when some class is too small to
    appear in at least two folds; the degenerate result is a single fold.
    """
    y = np.asarray(labels).ravel()
    if folds < 1:
        raise ConfigError(f"folds must be >= 1, got {folds}")
    _, counts = np.unique(y, return_counts=True)
    effective = min(folds, int(counts.min()))
    if effective < 2:
        effective = 1
    if effective < folds:
        warnings.warn(
            f"reducing folds from {folds} to {effective}: smallest class has {int(counts.min())} sample(s)",
            stacklevel=2,
        )
    fold_of = np.zeros(y.size, dtype=np.int64)
    if effective > 1:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(4,)))
        for c in np.unique(y):
            idx = rng.permutation(np.flatnonzero(y == c))
            fold_of[idx] = np.arange(idx.size) % effective
    return effective, fold_of


@dataclass(frozen=True)
class TuneResult:
    hyper: kelm.KelmHyperparams
    best_fitness: float
    trace_best: list[float]
    trace_mean: list[float]
    folds_used: int


def tune_kelm(train_x, train_labels, cfg: SsaConfig | None = None, folds: int = 5) -> TuneResult:
    """Search (log10 C, log10 gamma) minimizing cross-validated squared error.

    With ``folds`` >= 2 the objective is the mean held-out error over seeded
    stratified folds; with ``folds`` = 1 it degenerates to the training-set
    error of a model fit on everything.
    """
    cfg = cfg if cfg is not None else default_tuning_config()
    if cfg.dim != 2:
        raise ConfigError(f"tuning expects 2-D bounds (log10 C, log10 gamma), got {cfg.dim}-D")
    x = np.asarray(train_x, dtype=np.float64)
    y = np.asarray(train_labels).ravel()
    if x.shape[0] != y.size:
        raise DataError(f"{x.shape[0]} samples but {y.size} labels")
    effective, fold_of = stratified_fold_ids(y, folds, cfg.seed)
    class_ids = np.unique(y).astype(np.int64)

    def objective(z):
        hyper = kelm.KelmHyperparams(c=10.0 ** z[0], gamma=10.0 ** z[1])
        if effective == 1:
            model = kelm.train(x, y, hyper)
            scores, _ = kelm.predict(model, x)
            return kelm.mse_fitness(scores, kelm.one_hot(y, class_ids))
        errors = []
        for f in range(effective):
            held = fold_of == f
            model = kelm.train(x[~held], y[~held], hyper)
            scores, _ = kelm.predict(model, x[held])
            errors.append(kelm.mse_fitness(scores, kelm.one_hot(y[held], class_ids)))
        return float(np.mean(errors))

    result = optimize(objective, cfg)
    hyper = kelm.KelmHyperparams(c=10.0 ** result.best_pos[0], gamma=10.0 ** result.best_pos[1])
    return TuneResult(
        hyper=hyper,
        best_fitness=result.best_fit,
        trace_best=result.trace_best,
        trace_mean=result.trace_mean,
        folds_used=effective,
    )
