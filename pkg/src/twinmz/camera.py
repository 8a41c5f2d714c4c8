"""Synthetic line-scan camera for the pointer beam.

The sensor is reduced to its horizontal axis: the pointer only moves in the
plane of the apparatus, so the vertical pixels are integrated out. Pixel
``i`` covers sensor coordinate [(i - c - 1/2) p, (i - c + 1/2) p) with
``c = pixels // 2`` and ``p`` the pitch; the pointer coordinate q maps to
sensor coordinate q + offset.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class EmptyImageError(ValueError):
    pass


class OffSensorWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NoiseConfig:
    """Shot noise: each pixel's expected count is converted to photo-electrons,
    drawn from a Poisson distribution and converted back."""

    electrons_per_count: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if not self.electrons_per_count > 0:
            raise ValueError("electrons_per_count must be positive")


@dataclass(frozen=True)
class CameraConfig:
    pixels: int = 640
    pitch: float = 7.4
    depth_max: int = 255
    peak_level: int = 200
    offset: float = 0.0
    noise: NoiseConfig | None = None
    quantize: bool = True

    def __post_init__(self):
        if self.pixels < 1:
            raise ValueError("pixels must be positive")
        if not self.pitch > 0:
            raise ValueError("pitch must be positive")
        if not (0 < self.peak_level <= self.depth_max):
            raise ValueError("need 0 < peak_level <= depth_max")

    @property
    def center_pixel(self) -> int:
        return self.pixels // 2

    def pixel_edges(self) -> np.ndarray:
        """Pointer-coordinate edges (um) of every pixel, length pixels + 1."""
        i = np.arange(self.pixels + 1) - self.center_pixel - 0.5
        return i * self.pitch - self.offset

    def q_to_pixel(self, q):
        return (np.asarray(q, dtype=float) + self.offset) / self.pitch + self.center_pixel

    def pixel_to_q(self, y):
        return (np.asarray(y, dtype=float) - self.center_pixel) * self.pitch - self.offset

    def with_(self, **changes) -> "CameraConfig":
        params = {k: getattr(self, k) for k in self.__dataclass_fields__}
        params.update(changes)
        return CameraConfig(**params)


@dataclass(frozen=True)
class Image:
    values: np.ndarray
    depth_max: int = 255
    off_sensor: bool = False

    def __post_init__(self):
        v = np.array(self.values)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("pixel,count\n")
            for i, c in enumerate(self.values):
                fh.write(f"{i},{c}\n")

    def write_pgm(self, path, rows: int = 48):
        """ASCII PGM (P2); the line is repeated ``rows`` times for viewing."""
        line = " ".join(str(int(round(float(c)))) for c in self.values)
        with open(path, "w") as fh:
            fh.write(f"P2\n{len(self.values)} {rows}\n{self.depth_max}\n")
            for _ in range(rows):
                fh.write(line + "\n")


def _stream(noise: NoiseConfig, key) -> np.random.Generator:
    entropy = [int(noise.seed)] + [int(k) for k in key]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def render(report, cfg: CameraConfig, key=()) -> Image:
    """Integrate the pointer intensity over each pixel and digitize.

    The brightest pixel is scaled to ``cfg.peak_level``. ``key`` extends the
    noise seed so that every image in a sweep gets its own reproducible
    stream. With ``quantize=False`` the image keeps float counts (an
    idealized analog sensor); noise, if configured, is applied either way.
    """
    if not report.probability > 1e-14:
        raise ValueError("cannot render an empty pointer report")
    edges = cfg.pixel_edges()
    mass = report.mass_between(edges[:-1], edges[1:])
    peak = mass.max()
    if peak <= 0:
        raise EmptyImageError("pointer has no intensity on the sensor")
    counts = mass * (cfg.peak_level / peak)
    if cfg.noise is not None:
        rng = _stream(cfg.noise, key)
        k = cfg.noise.electrons_per_count
        counts = rng.poisson(counts * k) / k
    if cfg.quantize:
        counts = np.clip(np.rint(counts), 0, cfg.depth_max).astype(np.int64)
    else:
        counts = np.clip(counts, 0.0, float(cfg.depth_max))
    lo, hi = edges[0], edges[-1]
    off = not (lo <= report.centroid <= hi)
    if off:
        warnings.warn(
            f"pointer centroid {report.centroid:.1f} um is off the sensor [{lo:.1f}, {hi:.1f}]",
            OffSensorWarning,
            stacklevel=2,
        )
    return Image(counts, cfg.depth_max, off)


def centroid_pixels(img: Image) -> float:
    v = np.asarray(img.values, dtype=float)
    total = v.sum()
    if total <= 0:
        raise EmptyImageError("image has no intensity")
    return float(np.arange(len(v)) @ v / total)


def excited_pixel_count(img: Image, threshold: int = 10) -> int:
    if not 0 <= threshold <= img.depth_max:
        raise ValueError(f"threshold must be in [0, {img.depth_max}]")
    return int(np.count_nonzero(np.asarray(img.values) > threshold))
