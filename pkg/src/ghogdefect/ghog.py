"""Gabor-HOG block descriptors and the feature matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gabor import filter_image
from .image import BlockGrid

TWO_PI = 2 * np.pi


def gamma_rectify(fmap: np.ndarray, gamma: float = 0.5, value_range=None) -> np.ndarray:
    """Min-max rescale a filtered map to [0, 1], then apply a sign-preserving power.

    ``value_range`` overrides the (min, max) used for rescaling; values outside
    it map below 0 or above 1 and keep their sign under the power. A zero range
    rectifies to all zeros.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    fmap = np.asarray(fmap, dtype=np.float64)
    lo, hi = (fmap.min(), fmap.max()) if value_range is None else value_range
    if hi == lo:
        return np.zeros_like(fmap)
    scaled = (fmap - lo) / (hi - lo)
    return np.sign(scaled) * np.abs(scaled) ** gamma


@dataclass(frozen=True)
class GradientField:
    mag: np.ndarray
    angle: np.ndarray


def _diff(h: np.ndarray, axis: int) -> np.ndarray:
    # central difference h[i+1] - h[i-1]; one-sided h[1]-h[0], h[n-1]-h[n-2] at the ends
    d = np.empty_like(h)
    n = h.shape[axis]
    take = lambda a, b: np.take(h, np.arange(a, b), axis=axis)  # noqa: E731
    idx = [slice(None)] * h.ndim
    idx[axis] = slice(1, n - 1)
    d[tuple(idx)] = take(2, n) - take(0, n - 2)
    idx[axis] = slice(0, 1)
    d[tuple(idx)] = take(1, 2) - take(0, 1)
    idx[axis] = slice(n - 1, n)
    d[tuple(idx)] = take(n - 1, n) - take(n - 2, n - 1)
    return d


def compute_gradients(h: np.ndarray) -> GradientField:
    """Gradient magnitude and full-circle angle of a rectified map.

    Rows index y and columns index x. Angles come from atan2(dy, dx)
    wrapped into [0, 2 pi).
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or min(h.shape) < 3:
        raise ValueError(f"map must be 2-D and at least 3x3, got shape {h.shape}")
    dx = _diff(h, axis=1)
    dy = _diff(h, axis=0)
    mag = np.hypot(dx, dy)
    angle = np.mod(np.arctan2(dy, dx), TWO_PI)
    # mod can round tiny negatives up to exactly 2 pi
    angle[angle >= TWO_PI] = 0.0
    return GradientField(mag, angle)


def quantize_orientation(angle, n_bins: int):
    """Nearest-bin index of an angle on a circle split into ``n_bins`` sectors."""
    q = np.mod(np.floor(np.asarray(angle) / (TWO_PI / n_bins) + 0.5), n_bins).astype(np.int64)
    return int(q) if q.ndim == 0 else q


def block_histogram(field: GradientField, block: tuple[slice, slice], n_bins: int) -> np.ndarray:
    """Hard-binned magnitude histogram over one pixel rectangle."""
    bins = quantize_orientation(field.angle[block], n_bins)
    return np.bincount(
        np.ravel(bins), weights=np.ravel(field.mag[block]), minlength=n_bins
    )


def block_histograms(field: GradientField, grid: BlockGrid, n_bins: int) -> np.ndarray:
    """Raw (K, n_bins) histograms for every block of a cropped field."""
    bins = quantize_orientation(field.angle, n_bins)
    flat = grid.pixel_block_index() * n_bins + bins
    return np.bincount(
        flat.ravel(), weights=field.mag.ravel(), minlength=grid.K * n_bins
    ).reshape(grid.K, n_bins)


def l2_normalize_rows(h: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(h, axis=-1, keepdims=True)
    out = np.zeros_like(h)
    np.divide(h, norms, out=out, where=norms > 0)
    return out


def map_histograms(
    maps: np.ndarray,
    grid: BlockGrid,
    n_bins: int | None = None,
    gamma: float = 0.5,
    margin: int = 0,
) -> np.ndarray:
    """Raw histograms with shape (N_maps, K, n_bins) before normalization.

    ``maps`` cover the grid's pixel region plus ``margin`` extra pixels on
    every side. The margin only feeds the gradient stencil at the region
    border; rescaling uses the inner region's range.
    """
    maps = np.asarray(maps)
    h, w = grid.pixel_shape
    expected = (h + 2 * margin, w + 2 * margin)
    if maps.ndim != 3 or maps.shape[1:] != expected:
        raise ValueError(
            f"maps of shape {maps.shape} do not match grid pixel shape {grid.pixel_shape} "
            f"with margin {margin}"
        )
    n_bins = maps.shape[0] if n_bins is None else n_bins
    inner = (slice(margin, margin + h), slice(margin, margin + w))
    out = []
    for m in maps:
        core = m[inner]
        h_map = gamma_rectify(m, gamma, (core.min(), core.max()))
        g = compute_gradients(h_map)
        out.append(block_histograms(GradientField(g.mag[inner], g.angle[inner]), grid, n_bins))
    return np.stack(out)


def assemble_feature_matrix(
    maps: np.ndarray,
    grid: BlockGrid,
    n_bins: int | None = None,
    gamma: float = 0.5,
    margin: int = 0,
) -> np.ndarray:
    """Build the (n_maps * n_bins, K) matrix whose column k describes block k.

    Column k stacks, orientation map by orientation map, the unit-norm
    gradient histogram of block k.
    """
    hists = l2_normalize_rows(map_histograms(maps, grid, n_bins, gamma, margin))
    n_maps, K, nb = hists.shape
    return hists.transpose(0, 2, 1).reshape(n_maps * nb, K)


def filtered_maps_with_margin(img, grid: BlockGrid, params, method="spatial", n_jobs=1):
    """Gabor maps over the grid region plus a one-pixel margin.

    Margin pixels are filter responses on the symmetrically extended image,
    so border gradients see real neighbours instead of one-sided differences.
    """
    maps = filter_image(img, params, method=method, n_jobs=n_jobs, margin=1)
    h, w = grid.pixel_shape
    return maps[:, grid.top:grid.top + h + 2, grid.left:grid.left + w + 2]


def image_feature_matrix(img, grid: BlockGrid, params, gamma=0.5, method="spatial", n_jobs=1):
    """GHOG feature matrix of an image with one column per grid block."""
    maps = filtered_maps_with_margin(img, grid, params, method, n_jobs)
    return assemble_feature_matrix(maps, grid, int(params.num_orientations), gamma, margin=1)
