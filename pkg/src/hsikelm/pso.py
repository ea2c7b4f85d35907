"""Plain global-best particle swarm baseline used in optimizer comparisons.

Classic textbook variant: inertia decays linearly from 0.9 to 0.4,
cognitive and social coefficients fixed at 2.0, positions clamped to the
box bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PsoConfig:
    lower: np.ndarray
    upper: np.ndarray
    pop_size: int = 30
    max_iter: int = 200
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    cognitive: float = 2.0
    social: float = 2.0
    seed: int = 0

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
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class PsoResult:
    best_pos: np.ndarray
    best_fit: float
    trace_best: list[float]


def pso_minimize(obj, cfg: PsoConfig) -> PsoResult:
    rng = np.random.default_rng(cfg.seed)
    n, d = cfg.pop_size, cfg.lower.size
    span = cfg.upper - cfg.lower
    pos = cfg.lower + span * rng.uniform(size=(n, d))
    vel = np.zeros((n, d))
    fit = np.array([float(obj(p)) for p in pos])
    pbest = pos.copy()
    pbest_fit = fit.copy()
    g = int(np.argmin(fit))
    gbest = pos[g].copy()
    gbest_fit = float(fit[g])
    trace = []
    for t in range(cfg.max_iter):
        w = cfg.inertia_start + (cfg.inertia_end - cfg.inertia_start) * t / max(cfg.max_iter - 1, 1)
        r1 = rng.uniform(size=(n, d))
        r2 = rng.uniform(size=(n, d))
        vel = w * vel + cfg.cognitive * r1 * (pbest - pos) + cfg.social * r2 * (gbest - pos)
        vel = np.clip(vel, -span, span)
        pos = np.clip(pos + vel, cfg.lower, cfg.upper)
        fit = np.array([float(obj(p)) for p in pos])
        better = fit < pbest_fit
        pbest[better] = pos[better]
        pbest_fit[better] = fit[better]
        g = int(np.argmin(pbest_fit))
        if pbest_fit[g] < gbest_fit:
            gbest_fit = float(pbest_fit[g])
            gbest = pbest[g].copy()
        trace.append(gbest_fit)
    return PsoResult(best_pos=gbest, best_fit=gbest_fit, trace_best=trace)
