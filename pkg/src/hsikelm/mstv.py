"""Spectral feature extraction: band grouping, multi-scale relative-total-
variation smoothing, and landmark kernel PCA fusion.

The smoother minimizes a data-fidelity term plus a structure-aware penalty
sum_p [Dx_p / (Lx_p + eps) + Dy_p / (Ly_p + eps)], where Dx/Dy aggregate
absolute forward differences inside a Gaussian(sigma) window and Lx/Ly are
magnitudes of the windowed (signed) differences. It is solved by a few
rounds of an iteratively reweighted sparse linear system: each round fixes
per-edge weights from the current estimate, then solves
(I + lambda * L_w) s = g where L_w is the weighted 4-neighbor graph
Laplacian. The window scale is halved each round (floored at 0.5), matching
the standard solver for this objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.ndimage import gaussian_filter
from scipy.sparse import coo_matrix, identity
from scipy.sparse.linalg import spsolve
from scipy.spatial.distance import cdist

from .datacube import HyperCube
from .errors import ConfigError, DataError, NumericalError

_SOLVE_TOL = 1e-6
_EIG_RTOL = 1e-10
_TRANSFORM_CHUNK = 8192


@dataclass(frozen=True)
class RtvParams:
    """One smoothing scale: strength lambda, window sigma (pixels), solver rounds."""

    lam: float = 0.005
    sigma: float = 3.0
    iterations: int = 4
    epsilon_s: float = 1e-2
    epsilon_l: float = 1e-3

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.epsilon_s <= 0 or self.epsilon_l <= 0:
            raise ConfigError("stabilizers epsilon_s and epsilon_l must be > 0")


def default_scales() -> tuple[RtvParams, ...]:
    return tuple(RtvParams(lam=0.005, sigma=s) for s in (1.0, 2.0, 3.0))


@dataclass(frozen=True)
class MstvConfig:
    """Step-1 configuration: grouping size, smoothing scales, and KPCA fusion."""

    k: int = 20
    scales: tuple[RtvParams, ...] = field(default_factory=default_scales)
    n_components: int = 20
    kpca_gamma: float | None = None  # None -> 1/(k*L); 0.0 -> linear kernel
    landmark_count: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(self.scales))
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.scales:
            raise ConfigError("at least one smoothing scale is required")
        if not 1 <= self.n_components <= self.k * len(self.scales):
            raise ConfigError(
                f"n_components must lie in 1..{self.k * len(self.scales)}, got {self.n_components}"
            )
        if self.landmark_count < self.n_components:
            raise ConfigError(
                f"landmark_count {self.landmark_count} < n_components {self.n_components}"
            )
        if self.kpca_gamma is not None and self.kpca_gamma < 0:
            raise ConfigError(f"kpca_gamma must be >= 0 or None, got {self.kpca_gamma}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class BandGrouping:
    k: int
    groups: tuple[tuple[int, ...], ...]


def band_grouping(num_bands: int, k: int) -> BandGrouping:
    """Partition bands 0..M-1 into k contiguous groups; remainder joins the last."""
    if k < 1:
        raise ConfigError(f"group count must be >= 1, got {k}")
    if k > num_bands:
        raise ConfigError(f"group count {k} exceeds band count {num_bands}")
    size = num_bands // k
    groups = []
    for g in range(k - 1):
        groups.append(tuple(range(g * size, (g + 1) * size)))
    groups.append(tuple(range((k - 1) * size, num_bands)))
    return BandGrouping(k=k, groups=tuple(groups))


def group_and_average(cube: HyperCube, k: int) -> HyperCube:
    """Reduce to k bands, each the mean of its contiguous source group."""
    grouping = band_grouping(cube.bands, k)
    vals = cube.values.astype(np.float64)
    out = np.empty((cube.height, cube.width, k), dtype=np.float64)
    for g, members in enumerate(grouping.groups):
        out[:, :, g] = vals[:, :, list(members)].mean(axis=2)
    return HyperCube(out.astype(np.float32))


def scale_bands_unit(cube: HyperCube) -> HyperCube:
    """Min-max scale each band to [0, 1]; constant bands map to 0."""
    vals = cube.values.astype(np.float64)
    lo = vals.min(axis=(0, 1), keepdims=True)
    hi = vals.max(axis=(0, 1), keepdims=True)
    span = hi - lo
    span[span == 0] = 1.0
    out = (vals - lo) / span
    return HyperCube(out.astype(np.float32))


def _texture_weights(s, sigma, eps_s, eps_l):
    fx = np.diff(s, axis=1, append=s[:, -1:])
    fy = np.diff(s, axis=0, append=s[-1:, :])
    point = 1.0 / np.maximum(np.sqrt(fx**2 + fy**2), eps_s)
    blurred = gaussian_filter(s, sigma, mode="nearest", truncate=2.5)
    gfx = np.diff(blurred, axis=1, append=blurred[:, -1:])
    gfy = np.diff(blurred, axis=0, append=blurred[-1:, :])
    wx = point / np.maximum(np.abs(gfx), eps_l)
    wy = point / np.maximum(np.abs(gfy), eps_l)
    wx[:, -1] = 0.0
    wy[-1, :] = 0.0
    return wx, wy


def _weighted_laplacian(wx, wy, lam):
    h, w = wx.shape
    n = h * w
    idx = np.arange(n).reshape(h, w)
    # horizontal edges (p, p+1) and vertical edges (p, p+w)
    hp = idx[:, :-1].ravel()
    hw = lam * wx[:, :-1].ravel()
    vp = idx[:-1, :].ravel()
    vw = lam * wy[:-1, :].ravel()
    rows = np.concatenate([hp, hp + 1, hp, hp + 1, vp, vp + w, vp, vp + w])
    cols = np.concatenate([hp, hp + 1, hp + 1, hp, vp, vp + w, vp + w, vp])
    data = np.concatenate([hw, hw, -hw, -hw, vw, vw, -vw, -vw])
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def rtv_smooth(image: np.ndarray, params: RtvParams) -> np.ndarray:
    """Smooth one band: texture is flattened while large structures survive."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DataError(f"expected a 2-D raster, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise DataError("non-finite value in smoothing input")
    if params.lam == 0.0:
        return img.copy()
    g = img.ravel()
    out = img.copy()
    sigma = params.sigma
    for _ in range(params.iterations):
        wx, wy = _texture_weights(out, sigma, params.epsilon_s, params.epsilon_l)
        system = identity(g.size, format="csr") + _weighted_laplacian(wx, wy, params.lam)
        sol = spsolve(system, g)
        residual = np.max(np.abs(system @ sol - g))
        if not np.isfinite(residual) or residual > _SOLVE_TOL * (1.0 + np.max(np.abs(g))):
            raise NumericalError(f"smoothing solve failed, residual {residual:.3e}")
        out = sol.reshape(img.shape)
        sigma = max(sigma / 2.0, 0.5)
    return out


def multiscale_stack(cube: HyperCube, scales) -> HyperCube:
    """Smooth every band at every scale; output band l*K + k is (scale l, band k)."""
    scales = tuple(scales)
    if not scales:
        raise ConfigError("at least one smoothing scale is required")
    k = cube.bands
    out = np.empty((cube.height, cube.width, k * len(scales)), dtype=np.float32)
    for l, params in enumerate(scales):
        for band in range(k):
            out[:, :, l * k + band] = rtv_smooth(cube.values[:, :, band], params)
    return HyperCube(out)


@dataclass
class KpcaModel:
    """Fitted landmark projection: kernel landmarks and scaled eigenvectors."""

    landmarks: np.ndarray  # (m, d)
    gamma: float  # 0.0 means linear kernel
    eigenvalues: np.ndarray  # (N,) descending, strictly positive
    coeffs: np.ndarray  # (m, N) eigenvectors scaled by 1/sqrt(eigenvalue)
    col_mean: np.ndarray  # (m,) landmark-kernel column means
    total_mean: float


def _kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    if gamma == 0.0:
        return a @ b.T
    return np.exp(-gamma * cdist(a, b, "sqeuclidean"))


def kpca_fit(x: np.ndarray, n_components: int, gamma: float, landmark_count: int, seed: int) -> KpcaModel:
    """Center the landmark kernel, eigendecompose, keep the top components.

    Raises NumericalError when fewer than ``n_components`` strictly positive
    eigenvalues exist (the message reports the achievable count).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    m = min(landmark_count, n)
    if m < n_components:
        raise ConfigError(f"landmark count {m} < n_components {n_components}")
    rng = np.random.default_rng(seed)
    landmarks = x[rng.choice(n, size=m, replace=False)]
    k_mm = _kernel(landmarks, landmarks, gamma)
    col_mean = k_mm.mean(axis=0)
    total_mean = float(k_mm.mean())
    centered = k_mm - col_mean[None, :] - col_mean[:, None] + total_mean
    eigenvalues, eigenvectors = eigh(centered)
    eigenvalues = eigenvalues[::-1]
    eigenvectors = eigenvectors[:, ::-1]
    tol = max(eigenvalues[0], 0.0) * _EIG_RTOL
    achievable = int(np.sum(eigenvalues > tol))
    if achievable < n_components:
        raise NumericalError(
            f"fewer than {n_components} positive eigenvalues; achievable n_components={achievable}"
        )
    lam = eigenvalues[:n_components]
    coeffs = eigenvectors[:, :n_components] / np.sqrt(lam)[None, :]
    return KpcaModel(
        landmarks=landmarks,
        gamma=gamma,
        eigenvalues=lam,
        coeffs=coeffs,
        col_mean=col_mean,
        total_mean=total_mean,
    )


def kpca_transform(model: KpcaModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((x.shape[0], model.coeffs.shape[1]), dtype=np.float64)
    for start in range(0, x.shape[0], _TRANSFORM_CHUNK):
        stop = min(start + _TRANSFORM_CHUNK, x.shape[0])
        k = _kernel(x[start:stop], model.landmarks, model.gamma)
        k_centered = k - k.mean(axis=1, keepdims=True) - model.col_mean[None, :] + model.total_mean
        out[start:stop] = k_centered @ model.coeffs
    return out


def resolve_kpca_gamma(cfg: MstvConfig, feature_count: int) -> float:
    if cfg.kpca_gamma is None:
        return 1.0 / feature_count
    return float(cfg.kpca_gamma)


def kpca_reduce(stacked: HyperCube, cfg: MstvConfig) -> np.ndarray:
    """Project every pixel of the stacked cube onto the top components."""
    x = stacked.as_matrix()
    gamma = resolve_kpca_gamma(cfg, x.shape[1])
    model = kpca_fit(x, cfg.n_components, gamma, cfg.landmark_count, cfg.seed)
    return kpca_transform(model, x)


def mstv_features(cube: HyperCube, cfg: MstvConfig) -> np.ndarray:
    """Full spectral path: group/average, unit-scale, smooth per scale, fuse."""
    reduced = group_and_average(cube, cfg.k)
    scaled = scale_bands_unit(reduced)
    stacked = multiscale_stack(scaled, cfg.scales)
    return kpca_reduce(stacked, cfg)
