"""Directional real-valued Gabor filter bank."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage, signal

# sigma/lambda ratio for a one-octave bandwidth
SIGMA_PER_WAVELENGTH = 0.56

# half-sample symmetric extension: (c b a | a b c | c b a)
BOUNDARY_MODE = "reflect"


def sigma_from_bandwidth(wavelength: float, bandwidth: float = 1.0) -> float:
    """Gaussian sigma for a given wavelength and half-response bandwidth (octaves).

    Returns exactly ``0.56 * wavelength`` for the one-octave case.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if bandwidth == 1.0:
        return SIGMA_PER_WAVELENGTH * wavelength
    ratio = math.sqrt(math.log(2) / 2) / math.pi * (2**bandwidth + 1) / (2**bandwidth - 1)
    return ratio * wavelength


@dataclass(frozen=True)
class GaborParams:
    wavelength: float = 8.0
    orientation: float = 0.0
    phase: float = 0.0
    aspect_ratio: float = 0.5
    bandwidth: float = 1.0
    num_orientations: int = 8
    sigma: float | None = None

    def __post_init__(self):
        if self.sigma is None:
            object.__setattr__(
                self, "sigma", sigma_from_bandwidth(self.wavelength, self.bandwidth)
            )
        self.validate()

    def validate(self, image_shape=None) -> None:
        if not self.wavelength >= 2:
            raise ValueError(f"wavelength must be >= 2, got {self.wavelength}")
        if image_shape is not None:
            limit = min(image_shape) / 5
            if self.wavelength > limit:
                raise ValueError(
                    f"wavelength {self.wavelength} exceeds 1/5 of the smallest "
                    f"image dimension ({limit:g})"
                )
        if not 0 < self.aspect_ratio <= 1:
            raise ValueError(f"aspect_ratio must lie in (0, 1], got {self.aspect_ratio}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if int(self.num_orientations) != self.num_orientations or self.num_orientations < 1:
            raise ValueError(
                f"num_orientations must be a positive integer, got {self.num_orientations}"
            )

    @property
    def orientations(self) -> np.ndarray:
        """Evenly spaced orientations over [0, pi)."""
        n = int(self.num_orientations)
        return np.arange(n) * np.pi / n

    def at(self, orientation: float) -> "GaborParams":
        return replace(self, orientation=float(orientation))


@dataclass(frozen=True)
class GaborKernel:
    params: GaborParams
    taps: np.ndarray

    @property
    def radius(self) -> int:
        return self.taps.shape[0] // 2


def kernel_radius(sigma: float) -> int:
    return int(math.ceil(3 * sigma))


def build_kernel(params: GaborParams, part: str = "real") -> GaborKernel:
    """Sample the Gabor function on an odd square grid of radius ceil(3 sigma).

    ``taps[r + y, r + x]`` holds g(x, y), so rows follow +y and columns +x.
    ``part="imag"`` gives the sine (odd) variant.
    """
    r = kernel_radius(params.sigma)
    y, x = np.mgrid[-r:r + 1, -r:r + 1].astype(np.float64)
    ct, st = math.cos(params.orientation), math.sin(params.orientation)
    xr = x * ct + y * st
    yr = -x * st + y * ct
    envelope = np.exp(-(xr**2 + params.aspect_ratio**2 * yr**2) / (2 * params.sigma**2))
    carrier = 2 * np.pi * xr / params.wavelength + params.phase
    if part == "real":
        taps = envelope * np.cos(carrier)
    elif part == "imag":
        taps = envelope * np.sin(carrier)
    else:
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    return GaborKernel(params, taps)


def build_bank(params: GaborParams, part: str = "real") -> list[GaborKernel]:
    return [build_kernel(params.at(theta), part) for theta in params.orientations]


def correlate(
    img: np.ndarray, kernel: GaborKernel, method: str = "spatial", margin: int = 0
) -> np.ndarray:
    """2-D correlation with symmetric boundary extension.

    The output covers the image plus ``margin`` pixels on every side, each
    evaluated on the symmetrically extended image.
    """
    img = np.asarray(img, dtype=np.float64)
    side = kernel.taps.shape[0]
    if img.shape[0] < side or img.shape[1] < side:
        raise ValueError(
            f"image {img.shape[0]}x{img.shape[1]} is smaller than the "
            f"{side}x{side} kernel"
        )
    r = side // 2
    padded = np.pad(img, r + margin, mode="symmetric")
    if method == "spatial":
        out = ndimage.correlate(padded, kernel.taps, mode=BOUNDARY_MODE)
        return out[r:out.shape[0] - r, r:out.shape[1] - r]
    if method == "fft":
        return signal.fftconvolve(padded, kernel.taps[::-1, ::-1], mode="valid")
    raise ValueError(f"method must be 'spatial' or 'fft', got {method!r}")


def filter_image(
    img: np.ndarray,
    params: GaborParams,
    method: str = "spatial",
    n_jobs: int = 1,
    margin: int = 0,
) -> np.ndarray:
    """Filter an image with every orientation of the bank.

    Returns an array of shape (N, H + 2 margin, W + 2 margin), one map per
    orientation.
    """
    bank = build_bank(params)

    def run(k):
        return correlate(img, k, method, margin)

    if n_jobs == 1:
        maps = [run(k) for k in bank]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            maps = list(pool.map(run, bank))
    return np.stack(maps)
