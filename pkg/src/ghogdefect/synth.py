"""Seeded periodic test textures with injected defects and exact ground truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

MOTIFS = ("stripes", "checker", "dots")
SHAPES = ("rectangle", "blob")
KINDS = ("intensity-shift", "orientation-break", "motif-erasure")

LOW, HIGH = 0.25, 0.75


@dataclass(frozen=True)
class Defect:
    shape: str = "rectangle"
    kind: str = "orientation-break"
    position: tuple[int, int] = (0, 0)   # (row, col) of the top-left corner
    size: tuple[int, int] = (64, 64)     # (height, width) of the bounding box
    strength: float = 0.4                # intensity delta for intensity-shift

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(int(v) for v in self.position))
        object.__setattr__(self, "size", tuple(int(v) for v in self.size))


@dataclass(frozen=True)
class SynthSpec:
    motif: str = "checker"
    period: int = 16
    image_size: int = 256
    defect: Defect | None = None
    noise_sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.defect, dict):
            object.__setattr__(self, "defect", Defect(**self.defect))
        self.validate()

    def validate(self) -> None:
        if self.motif not in MOTIFS:
            raise ValueError(f"motif must be one of {MOTIFS}, got {self.motif!r}")
        if int(self.period) != self.period or self.period < 4:
            raise ValueError(f"period must be an integer >= 4, got {self.period}")
        if self.image_size < 8 * self.period:
            raise ValueError(
                f"image_size {self.image_size} must hold at least 8 periods of {self.period}"
            )
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        d = self.defect
        if d is None:
            return
        if d.shape not in SHAPES:
            raise ValueError(f"defect shape must be one of {SHAPES}, got {d.shape!r}")
        if d.kind not in KINDS:
            raise ValueError(f"defect kind must be one of {KINDS}, got {d.kind!r}")
        (r, c), (h, w) = d.position, d.size
        if h < 1 or w < 1:
            raise ValueError(f"defect size must be positive, got {d.size}")
        if r < 0 or c < 0 or r + h > self.image_size or c + w > self.image_size:
            raise ValueError(
                f"defect at {d.position} of size {d.size} does not fit in a "
                f"{self.image_size}x{self.image_size} image"
            )

    def to_dict(self) -> dict:
        return asdict(self)


def centered_defect(image_size: int, size: int, **kwargs) -> Defect:
    start = (image_size - size) // 2
    return Defect(position=(start, start), size=(size, size), **kwargs)


def motif_image(motif: str, period: int, size: int) -> np.ndarray:
    """Defect-free texture whose cells are mirror-symmetric about their centers.

    The symmetry makes the pattern invariant under half-sample reflection at
    any image border that falls on a cell boundary.
    """
    y, x = np.mgrid[0:size, 0:size]
    if motif == "stripes":
        phase = y % period
        on = (phase >= period // 4) & (phase < period - period // 4)
    elif motif == "checker":
        half = period // 2
        q = half // 2
        on = (((x + q) // half) + ((y + q) // half)) % 2 == 1
    elif motif == "dots":
        c = (period - 1) / 2
        on = ((x % period) - c) ** 2 + ((y % period) - c) ** 2 <= (period / 4) ** 2
    else:
        raise ValueError(f"unknown motif {motif!r}")
    return np.where(on, HIGH, LOW)


def diagonal_stripes(period: int, size: int) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size]
    # same spatial period measured across the stripes
    t = ((x + y) / np.sqrt(2)) % period
    return np.where(t < period / 2, HIGH, LOW)


def defect_region(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    size = spec.image_size
    region = np.zeros((size, size), dtype=bool)
    d = spec.defect
    (r, c), (h, w) = d.position, d.size
    if d.shape == "rectangle":
        region[r:r + h, c:c + w] = True
        return region
    # blob: union of random ellipses inside the bounding box, always covering its center
    yy, xx = np.mgrid[0:h, 0:w]
    box = np.zeros((h, w), dtype=bool)
    centers = [((h - 1) / 2, (w - 1) / 2)] + [
        (rng.uniform(0.25, 0.75) * h, rng.uniform(0.25, 0.75) * w) for _ in range(4)
    ]
    for cy, cx in centers:
        ry = rng.uniform(0.15, 0.3) * h
        rx = rng.uniform(0.15, 0.3) * w
        box |= ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    region[r:r + h, c:c + w] = box
    return region


def generate(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render ``spec`` into an image in [0, 1] and a boolean defect mask."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    img = motif_image(spec.motif, spec.period, spec.image_size)
    truth = np.zeros(img.shape, dtype=bool)
    if spec.defect is not None:
        truth = defect_region(spec, rng)
        kind = spec.defect.kind
        if kind == "intensity-shift":
            img = np.where(truth, img + spec.defect.strength, img)
        elif kind == "orientation-break":
            img = np.where(truth, diagonal_stripes(spec.period, spec.image_size), img)
        elif kind == "motif-erasure":
            img = np.where(truth, LOW, img)
    if spec.noise_sigma > 0:
        img = img + rng.normal(0.0, spec.noise_sigma, img.shape)
    return np.clip(img, 0.0, 1.0), truth
