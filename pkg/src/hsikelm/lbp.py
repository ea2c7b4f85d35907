"""Per-pixel local binary pattern codes over each band of a cube.

Each pixel is compared with its 3x3 ring; neighbor p contributes 2^p when
its value is >= the center. Bit order is clockwise from the top-left
neighbor: TL, T, TR, R, BR, B, BL, L. Borders replicate the edge pixel so
every pixel gets a code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datacube import HyperCube
from .errors import ConfigError

# (row, col) offsets in bit order TL, T, TR, R, BR, B, BL, L
NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass(frozen=True)
class LbpConfig:
    neighbors: int = 8
    radius: int = 1
    replicate_border: bool = True

    def __post_init__(self):
        if self.neighbors != 8:
            raise ConfigError(f"only the 8-neighbor ring is supported, got {self.neighbors}")
        if self.radius != 1:
            raise ConfigError(f"only radius 1 is supported, got {self.radius}")
        if not self.replicate_border:
            raise ConfigError("only replicate border padding is supported")

    @property
    def max_code(self) -> int:
        return (1 << self.neighbors) - 1


def _band_codes(band: np.ndarray) -> np.ndarray:
    padded = np.pad(band, 1, mode="edge")
    h, w = band.shape
    codes = np.zeros((h, w), dtype=np.uint8)
    for bit, (dr, dc) in enumerate(NEIGHBOR_OFFSETS):
        neighbor = padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
        codes |= (neighbor >= band).astype(np.uint8) << bit
    return codes


def lbp_code(image: np.ndarray, row: int, col: int, cfg: LbpConfig = LbpConfig()) -> int:
    """Code of a single pixel; borders use replicate padding."""
    image = np.asarray(image)
    if not (0 <= row < image.shape[0] and 0 <= col < image.shape[1]):
        raise ConfigError(f"pixel ({row}, {col}) outside image of shape {image.shape}")
    center = image[row, col]
    code = 0
    for bit, (dr, dc) in enumerate(NEIGHBOR_OFFSETS):
        r = min(max(row + dr, 0), image.shape[0] - 1)
        c = min(max(col + dc, 0), image.shape[1] - 1)
        if image[r, c] >= center:
            code |= 1 << bit
    return code


def lbp_features(cube: HyperCube, cfg: LbpConfig = LbpConfig()) -> np.ndarray:
    """Pixels-by-bands matrix of codes scaled to [0, 1] by 2^P - 1."""
    h, w, b = cube.values.shape
    out = np.empty((h * w, b), dtype=np.float64)
    for band in range(b):
        out[:, band] = _band_codes(cube.values[:, :, band]).ravel()
    out /= cfg.max_code
    return out
