"""Estimator-style wrappers around the detection pipeline.

The classes follow the scikit-learn conventions: constructor arguments are
stored untouched, ``fit`` returns ``self`` and learned state ends with an
underscore. A single image is one sample here, so ``X`` is a 2-D array of
intensities rather than a feature table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import admm, saliency
from .admm import SolverConfig
from .config import RunConfig
from .gabor import GaborParams
from .ghog import assemble_feature_matrix, filtered_maps_with_margin
from .image import BlockGrid, make_block_grid
from .metrics import iou


def check_image(X) -> np.ndarray:
    """A finite 2-D float64 image with values in [0, 1]."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=3, ensure_min_features=3,
                    input_name="image")
    if X.min() < 0 or X.max() > 1:
        raise ValueError(f"image values must lie in [0, 1], got [{X.min():g}, {X.max():g}]")
    return X


def check_features(F) -> np.ndarray:
    return check_array(F, dtype=np.float64, input_name="feature matrix")


def grid_for_features(F, grid_shape=None, block_size=16) -> BlockGrid:
    """Block grid for a saved feature matrix; square unless ``grid_shape`` is given."""
    K = np.shape(F)[1]
    if grid_shape is None:
        side = int(round(np.sqrt(K)))
        if side * side != K:
            raise ValueError(f"K={K} is not a square number; give the grid shape explicitly")
        grid_shape = (side, side)
    rows, cols = grid_shape
    if rows * cols != K:
        raise ValueError(f"grid {rows}x{cols} does not hold K={K} blocks")
    return BlockGrid(block_size, rows, cols)


class GHOGExtractor(BaseEstimator, TransformerMixin):
    """Image -> (d, K) GHOG feature matrix, one column per block."""

    def __init__(self, wavelength=8.0, aspect_ratio=0.5, phase=0.0, bandwidth=1.0,
                 num_orientations=8, block_size=16, gamma=0.5, filter_method="spatial",
                 n_jobs=1):
        self.wavelength = wavelength
        self.aspect_ratio = aspect_ratio
        self.phase = phase
        self.bandwidth = bandwidth
        self.num_orientations = num_orientations
        self.block_size = block_size
        self.gamma = gamma
        self.filter_method = filter_method
        self.n_jobs = n_jobs

    def gabor_params(self) -> GaborParams:
        return GaborParams(
            wavelength=self.wavelength, aspect_ratio=self.aspect_ratio, phase=self.phase,
            bandwidth=self.bandwidth, num_orientations=self.num_orientations,
        )

    def fit(self, X=None, y=None):
        self.params_ = self.gabor_params()
        if X is not None:
            self.params_.validate(check_image(X).shape)
        return self

    def extract(self, X):
        """Return ``(F, grid, maps)``; maps include the one-pixel margin."""
        X = check_image(X)
        params = getattr(self, "params_", None) or self.gabor_params()
        params.validate(X.shape)
        grid = make_block_grid(X, self.block_size)
        maps = filtered_maps_with_margin(X, grid, params, self.filter_method, self.n_jobs)
        F = assemble_feature_matrix(maps, grid, int(params.num_orientations), self.gamma,
                                    margin=1)
        return F, grid, maps

    def transform(self, X):
        return self.extract(X)[0]


class LogDetRPCA(BaseEstimator, TransformerMixin):
    """Low-rank + sparse split of a feature matrix; ``transform`` gives the sparse part."""

    def __init__(self, sparsity_weight=None, logdet_offset=None, penalty=None, tol=1e-7,
                 max_iter=500, change_tol=1e-6, sparsity_scale=0.3, penalty_scale=3.0,
                 penalty_growth=1.2, max_penalty_ratio=1e8):
        self.sparsity_weight = sparsity_weight
        self.logdet_offset = logdet_offset
        self.penalty = penalty
        self.tol = tol
        self.max_iter = max_iter
        self.change_tol = change_tol
        self.sparsity_scale = sparsity_scale
        self.penalty_scale = penalty_scale
        self.penalty_growth = penalty_growth
        self.max_penalty_ratio = max_penalty_ratio

    @classmethod
    def from_config(cls, cfg: SolverConfig) -> "LogDetRPCA":
        names = cls._get_param_names()
        return cls(**{k: getattr(cfg, k) for k in names})

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.get_params())

    def fit(self, X, y=None, callback=None):
        F = check_features(X)
        dec = admm.solve(F, self.solver_config(), callback=callback)
        self.decomposition_ = dec
        self.fit_matrix_ = F
        self.low_rank_ = dec.L
        self.sparse_ = dec.S
        self.multiplier_ = dec.Z
        self.n_iter_ = dec.iters_run
        self.converged_ = dec.converged
        return self

    def transform(self, X):
        """Sparse part of ``X``; reuses the fit when ``X`` is the fitted matrix."""
        check_is_fitted(self, "sparse_")
        F = check_features(X)
        if F.shape == self.fit_matrix_.shape and np.array_equal(F, self.fit_matrix_):
            return self.sparse_
        return admm.solve(F, self.solver_config()).S

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).sparse_


@dataclass
class DetectionResult:
    grid: BlockGrid
    features: np.ndarray
    decomposition: admm.Decomposition
    saliency: np.ndarray      # block L1 norms of S
    smoothed: np.ndarray
    relative: np.ndarray      # smoothed saliency in descriptor units
    gray: np.ndarray          # 0..255 block map
    defect: saliency.DefectMask
    maps: np.ndarray | None = None

    @property
    def mask(self) -> np.ndarray:
        return self.defect.mask


class DefectDetector(BaseEstimator):
    """End-to-end detector: image in, pixel defect mask out.

    No training is involved; every image is modelled on its own, so ``fit``
    only validates the parameters. ``min_saliency`` gates blocks whose
    relative saliency (root of the smoothed map over the median descriptor
    L1 norm) falls short, which keeps clean textures clean.
    """

    def __init__(self, wavelength=8.0, aspect_ratio=0.5, phase=0.0, bandwidth=1.0,
                 num_orientations=8, block_size=16, gamma=0.5, filter_method="spatial",
                 smoothing_radius=2, threshold_offset=0, min_saliency=0.25, solver=None,
                 n_jobs=1):
        self.wavelength = wavelength
        self.aspect_ratio = aspect_ratio
        self.phase = phase
        self.bandwidth = bandwidth
        self.num_orientations = num_orientations
        self.block_size = block_size
        self.gamma = gamma
        self.filter_method = filter_method
        self.smoothing_radius = smoothing_radius
        self.threshold_offset = threshold_offset
        self.min_saliency = min_saliency
        self.solver = solver
        self.n_jobs = n_jobs

    @classmethod
    def from_config(cls, cfg: RunConfig, n_jobs=1) -> "DefectDetector":
        g = cfg.gabor
        return cls(
            wavelength=g.wavelength, aspect_ratio=g.aspect_ratio, phase=g.phase,
            bandwidth=g.bandwidth, num_orientations=g.num_orientations,
            block_size=cfg.block_size, gamma=cfg.gamma, filter_method=cfg.filter_method,
            smoothing_radius=cfg.smoothing_radius, threshold_offset=cfg.threshold_offset,
            min_saliency=cfg.min_saliency, solver=cfg.solver, n_jobs=n_jobs,
        )

    def _extractor(self) -> GHOGExtractor:
        names = GHOGExtractor._get_param_names()
        return GHOGExtractor(**{k: getattr(self, k) for k in names})

    def fit(self, X=None, y=None):
        RunConfig(
            gabor=self._extractor().gabor_params(), block_size=self.block_size,
            hog_bins=self.num_orientations, gamma=self.gamma, solver=self.solver_config(),
            smoothing_radius=self.smoothing_radius, threshold_offset=self.threshold_offset,
            min_saliency=self.min_saliency, filter_method=self.filter_method,
        )
        self.fitted_ = True
        return self

    def solver_config(self) -> SolverConfig:
        return self.solver if self.solver is not None else SolverConfig()

    def detect(self, X, keep_maps=False, callback=None) -> DetectionResult:
        F, grid, maps = self._extractor().extract(X)
        return self.detect_features(F, grid, callback=callback,
                                    maps=maps if keep_maps else None)

    def detect_features(self, F, grid: BlockGrid, callback=None, maps=None) -> DetectionResult:
        """Run the decomposition and segmentation on a precomputed feature matrix."""
        F = check_features(F)
        dec = admm.solve(F, self.solver_config(), callback=callback)
        sal = saliency.saliency_from_sparse(dec.S, grid)
        smoothed = saliency.smooth_saliency(sal, self.smoothing_radius)
        rel = saliency.relative_saliency(smoothed, F)
        gray = saliency.to_gray(smoothed)
        support = rel >= self.min_saliency if self.min_saliency > 0 else None
        seg = saliency.segment(gray, grid, self.threshold_offset, support)
        return DetectionResult(grid, F, dec, sal, smoothed, rel, gray, seg, maps)

    def predict(self, X) -> np.ndarray:
        """Boolean defect mask over the cropped image region."""
        return self.detect(X).mask

    def decision_function(self, X) -> np.ndarray:
        """Pixel-resolution gray saliency (0..255)."""
        res = self.detect(X)
        return res.grid.broadcast(res.gray)

    def score(self, X, y) -> float:
        """Intersection-over-union between the predicted mask and ``y``."""
        res = self.detect(X)
        return iou(res.mask, res.grid.crop(np.asarray(y, dtype=bool)))
