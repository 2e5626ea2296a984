"""Block saliency from the sparse part, smoothing, gray mapping and segmentation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import BlockGrid

# half-sample symmetric extension; with an axis-symmetric kernel it conserves mass
BOUNDARY_MODE = "reflect"


def saliency_from_sparse(S: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Column-wise L1 norms of ``S`` laid out on the block grid (row-major)."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] != grid.K:
        raise ValueError(f"S has {np.shape(S)[-1]} columns, grid has K={grid.K} blocks")
    return np.abs(S).sum(axis=0).reshape(grid.shape)


def disk_kernel(radius: int) -> np.ndarray:
    """Normalized disk mean filter of integer ``radius`` (1x1 identity for 0)."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    r = int(radius)
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    k = (x * x + y * y <= r * r).astype(np.float64)
    return k / k.sum()


def smooth_saliency(saliency: np.ndarray, radius: int = 2) -> np.ndarray:
    """Square elementwise, then average over a disk of ``radius`` blocks."""
    sq = np.square(np.asarray(saliency, dtype=np.float64))
    if radius == 0:
        return sq
    return ndimage.correlate(sq, disk_kernel(radius), mode=BOUNDARY_MODE)


def to_gray(smoothed: np.ndarray) -> np.ndarray:
    """Min-max map to integers 0..255, rounding half up; constant input gives zeros."""
    m = np.asarray(smoothed, dtype=np.float64)
    lo, hi = m.min(), m.max()
    if not hi > lo:
        return np.zeros(m.shape, dtype=np.int64)
    g = np.floor((m - lo) / (hi - lo) * 255.0 + 0.5)
    return np.clip(g, 0, 255).astype(np.int64)


def otsu_threshold(gray: np.ndarray) -> int:
    """Otsu threshold over a 256-level histogram; pixels ``> t`` form the upper class.

    Among equally good thresholds the smallest is returned. A map with a
    single gray level yields that level, so nothing lies above it.
    """
    g = np.asarray(gray).ravel().astype(np.int64)
    hist = np.bincount(g, minlength=256)[:256].astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)[:-1]
    m0 = np.cumsum(hist * levels)[:-1]
    w1 = total - w0
    mt = m0[-1] + hist[-1] * 255.0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return int(g.max())
    between = np.zeros(255)
    between[valid] = (mt * w0[valid] - m0[valid] * total) ** 2 / (w0[valid] * w1[valid])
    best = between.max()
    return int(np.flatnonzero(between >= best * (1 - 1e-12))[0])


@dataclass(frozen=True)
class DefectMask:
    mask: np.ndarray          # pixel-resolution bool, True = defect
    block_mask: np.ndarray    # (rows, cols) bool
    threshold_used: int


def relative_saliency(smoothed: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Root of the smoothed map over the median column L1 norm of ``F``.

    This puts saliency in units of a typical descriptor, so a fixed floor
    means the same thing for every image. A zero ``F`` gives zeros.
    """
    scale = float(np.median(np.abs(np.asarray(F, dtype=np.float64)).sum(axis=0)))
    root = np.sqrt(np.asarray(smoothed, dtype=np.float64))
    if not scale > 0:
        return np.zeros_like(root)
    return root / scale


def segment(gray: np.ndarray, grid: BlockGrid, offset: int = 0,
            support: np.ndarray | None = None) -> DefectMask:
    """Flag blocks whose gray level exceeds the Otsu threshold plus ``offset``.

    ``support`` is an optional block-level boolean gate; blocks outside it are
    never flagged. Min-max scaling always stretches a map to 0..255, so on a
    clean texture Otsu still splits the noise; the gate is how an absolute
    saliency floor vetoes that.
    """
    gray = np.asarray(gray)
    if gray.shape != grid.shape:
        raise ValueError(f"gray map shape {gray.shape} does not match grid {grid.shape}")
    t = otsu_threshold(gray) + int(offset)
    blocks = gray > t
    if support is not None:
        support = np.asarray(support, dtype=bool)
        if support.shape != grid.shape:
            raise ValueError(f"support shape {support.shape} does not match grid {grid.shape}")
        blocks &= support
    return DefectMask(grid.broadcast(blocks), blocks, t)
