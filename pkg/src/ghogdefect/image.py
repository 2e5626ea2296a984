"""Image ingestion and block-grid geometry."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R 601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


class ImageLoadError(OSError):
    """Raised when a raster cannot be read or is not usable."""


def load_image(path) -> np.ndarray:
    """Read a PNG/PGM raster as a float64 array with values in [0, 1].

    RGB(A) inputs are reduced to luminance; alpha is ignored.
    """
    path = Path(path)
    if not path.is_file():
        raise ImageLoadError(f"no such image file: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "P"):
                arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            elif mode in ("RGB", "RGBA"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = (rgb @ _LUMA) / 255.0
            elif mode in ("I;16", "I;16B", "I"):
                raw = np.asarray(im, dtype=np.float64)
                arr = raw / (65535.0 if raw.max() > 255 else 255.0)
            elif mode == "1":
                arr = np.asarray(im, dtype=np.float64)
            else:
                raise ImageLoadError(f"unsupported image mode {mode!r}: {path}")
    except UnidentifiedImageError as exc:
        raise ImageLoadError(f"unreadable or unsupported image: {path}") from exc
    if arr.size == 0 or 0 in arr.shape:
        raise ImageLoadError(f"zero-dimension image: {path}")
    return np.clip(arr, 0.0, 1.0)


def save_gray_png(path, values) -> None:
    """Write an integer grid in [0, 255] as an 8-bit grayscale PNG."""
    arr = np.asarray(values)
    Image.fromarray(np.clip(arr, 0, 255).astype(np.uint8), mode="L").save(path)


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(np.asarray(img) * 255.0 + 0.5), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class BlockGrid:
    """Disjoint square tiles covering a (center-cropped) image.

    ``top`` and ``left`` give the crop offset into the source image; the
    covered region is ``rows * block_size`` by ``cols * block_size``.
    """

    block_size: int
    rows: int
    cols: int
    top: int = 0
    left: int = 0

    @property
    def K(self) -> int:
        return self.rows * self.cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def pixel_shape(self) -> tuple[int, int]:
        return (self.rows * self.block_size, self.cols * self.block_size)

    def crop(self, img: np.ndarray) -> np.ndarray:
        h, w = self.pixel_shape
        return img[self.top:self.top + h, self.left:self.left + w]

    def block_slice(self, i: int) -> tuple[slice, slice]:
        """Pixel rectangle of block ``i`` (row-major) in cropped coordinates."""
        if not 0 <= i < self.K:
            raise IndexError(f"block index {i} out of range for K={self.K}")
        r, c = divmod(i, self.cols)
        b = self.block_size
        return slice(r * b, (r + 1) * b), slice(c * b, (c + 1) * b)

    def pixel_block_index(self) -> np.ndarray:
        """Row-major block index for every pixel of the cropped image."""
        b = self.block_size
        r = np.arange(self.rows * b) // b
        c = np.arange(self.cols * b) // b
        return r[:, None] * self.cols + c[None, :]

    def broadcast(self, block_values: np.ndarray) -> np.ndarray:
        """Expand a (rows, cols) grid to pixel resolution."""
        block_values = np.asarray(block_values)
        if block_values.shape != self.shape:
            raise ValueError(
                f"block grid has shape {self.shape}, got {block_values.shape}"
            )
        b = self.block_size
        return np.repeat(np.repeat(block_values, b, axis=0), b, axis=1)


def make_block_grid(img: np.ndarray, block_size: int) -> BlockGrid:
    """Tile an image into ``block_size`` squares, cropping residue symmetrically.

    When a dimension leaves an odd residue the extra pixel goes to the
    bottom/right crop.
    """
    if int(block_size) != block_size or block_size < 2:
        raise ValueError(f"block_size must be an integer >= 2, got {block_size}")
    block_size = int(block_size)
    h, w = np.shape(img)[:2]
    if block_size > h or block_size > w:
        raise ValueError(
            f"block_size {block_size} exceeds image dimensions {h}x{w}"
        )
    rows, cols = h // block_size, w // block_size
    top = (h - rows * block_size) // 2
    left = (w - cols * block_size) // 2
    return BlockGrid(block_size, rows, cols, top, left)


def extract_blocks(img: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Return a (K, b, b) stack of blocks in row-major order."""
    b = grid.block_size
    cropped = grid.crop(np.asarray(img))
    return (
        cropped.reshape(grid.rows, b, grid.cols, b)
        .swapaxes(1, 2)
        .reshape(grid.K, b, b)
    )


def assemble_blocks(blocks: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Inverse of :func:`extract_blocks` on the cropped region."""
    b = grid.block_size
    return (
        np.asarray(blocks)
        .reshape(grid.rows, grid.cols, b, b)
        .swapaxes(1, 2)
        .reshape(grid.rows * b, grid.cols * b)
    )
