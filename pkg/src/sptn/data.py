"""Dataset ingestion: MNIST-style IDX files and deterministic generators.

Image features are scaled to [0, 1]; the synthetic blob generator
standardizes each feature instead.  Datasets are immutable after
construction and safe to share read-only between concurrent runs.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .numerics import Prng

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
_GZIP_PREFIX = b"\x1f\x8b"


class IdxFormatError(ValueError):
    """Raised when an IDX file does not match the expected layout."""


@dataclass
class Dataset:
    features: np.ndarray  # (n, feature_dim) float64
    labels: np.ndarray    # (n,) int64
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D (n, dim) array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length does not match features")
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ValueError("label out of range for num_classes")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite values")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(
            features=self.features[indices].copy(),
            labels=self.labels[indices].copy(),
            num_classes=self.num_classes,
        )

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


def _read_file(path) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == _GZIP_PREFIX:
        raw = gzip.decompress(raw)
    return raw


def _parse_idx_images(raw: bytes, path) -> np.ndarray:
    if len(raw) < 16:
        raise IdxFormatError(f"truncated IDX image file {path}: header incomplete")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise IdxFormatError(
            f"bad magic 0x{magic:08x} in IDX image file {path} "
            f"(expected 0x{IDX_IMAGES_MAGIC:08x})"
        )
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise IdxFormatError(
            f"truncated IDX image file {path}: has {len(raw)} bytes, "
            f"needs {expected}"
        )
    if len(raw) > expected:
        raise IdxFormatError(f"IDX image file {path} has trailing bytes")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16)
    return pixels.reshape(count, rows * cols)


def _parse_idx_labels(raw: bytes, path) -> np.ndarray:
    if len(raw) < 8:
        raise IdxFormatError(f"truncated IDX label file {path}: header incomplete")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != IDX_LABELS_MAGIC:
        raise IdxFormatError(
            f"bad magic 0x{magic:08x} in IDX label file {path} "
            f"(expected 0x{IDX_LABELS_MAGIC:08x})"
        )
    expected = 8 + count
    if len(raw) < expected:
        raise IdxFormatError(
            f"truncated IDX label file {path}: has {len(raw)} bytes, "
            f"needs {expected}"
        )
    if len(raw) > expected:
        raise IdxFormatError(f"IDX label file {path} has trailing bytes")
    return np.frombuffer(raw, dtype=np.uint8, offset=8)


def load_mnist_idx(images_path, labels_path) -> Dataset:
    """Load a big-endian IDX image/label file pair (gzip detected by prefix).

    Pixels are scaled to [0, 1].  The class count is pinned to 10, the digit
    alphabet of these files.
    """
    images = _parse_idx_images(_read_file(images_path), images_path)
    labels = _parse_idx_labels(_read_file(labels_path), labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {images.shape[0]} images in {images_path} vs "
            f"{labels.shape[0]} labels in {labels_path}"
        )
    if labels.size and labels.max() > 9:
        raise IdxFormatError(
            f"label value {labels.max()} out of digit range in {labels_path}"
        )
    return Dataset(
        features=images.astype(np.float64) / 255.0,
        labels=labels.astype(np.int64),
        num_classes=10,
    )


def write_idx_images(path, images: np.ndarray) -> None:
    """Write a (n, rows, cols) uint8 array as an IDX image file.

    Gzip-compresses when the path ends in ``.gz`` (with zeroed mtime so the
    output bytes are deterministic).
    """
    if images.ndim != 3 or images.dtype != np.uint8:
        raise ValueError("images must be a (n, rows, cols) uint8 array")
    n, rows, cols = images.shape
    payload = struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols)
    payload += images.tobytes()
    _write_maybe_gzip(path, payload)


def write_idx_labels(path, labels: np.ndarray) -> None:
    """Write a (n,) uint8 array as an IDX label file."""
    if labels.ndim != 1 or labels.dtype != np.uint8:
        raise ValueError("labels must be a 1-D uint8 array")
    payload = struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0])
    payload += labels.tobytes()
    _write_maybe_gzip(path, payload)


def _write_maybe_gzip(path, payload: bytes) -> None:
    if str(path).endswith(".gz"):
        # Blank filename and zero mtime keep the compressed bytes
        # independent of the output path and wall clock.
        with open(path, "wb") as fh:
            with gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0) as gz:
                gz.write(payload)
    else:
        with open(path, "wb") as fh:
            fh.write(payload)


def synth_blobs(n: int, classes: int, dim: int, rng: Prng, separation: float = 4.0) -> Dataset:
    """Gaussian clusters at fixed axis-aligned centers, standardized features.

    Class ``c`` sits on coordinate axis ``c % dim`` at a multiple of
    ``separation``; sample ``i`` belongs to class ``i % classes``, so the
    class counts are balanced to within one.
    """
    if classes < 2 or n < classes:
        raise ValueError("need n >= classes >= 2")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    centers = np.zeros((classes, dim))
    for c in range(classes):
        centers[c, c % dim] = separation * (1 + c // dim)
    labels = np.arange(n, dtype=np.int64) % classes
    feats = centers[labels] + rng.gaussians(n * dim).reshape(n, dim)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std == 0.0] = 1.0
    feats = (feats - mean) / std
    return Dataset(features=feats, labels=labels, num_classes=classes)


# 7x5 bitmap glyphs for the procedural digit generator.
_GLYPH_ROWS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}


def _glyph_bitmaps() -> np.ndarray:
    out = np.zeros((10, 7, 5))
    for digit, rows in _GLYPH_ROWS.items():
        for r, row in enumerate(rows):
            out[digit, r] = [float(ch) for ch in row]
    return out


_GLYPHS = _glyph_bitmaps()


def synth_digits(n: int, rng: Prng, noise: float = 0.25, max_shift: int = 3) -> Dataset:
    """Procedural 28x28 digit images with per-sample handwriting-style variation.

    Each render draws its own scale, position, slant, stroke dropout, stroke
    thickness, contrast, background smudge, and pixel noise, so classes have
    substantial internal diversity.  A deterministic stand-in with the same
    shape as the classic handwritten digit files (784 features in [0, 1],
    ten balanced classes), usable offline.  Pixel values are quantized to
    the u8/255 grid so a round trip through the IDX format is lossless.
    """
    if n < 10:
        raise ValueError("need at least one sample per digit class")
    labels = np.arange(n, dtype=np.int64) % 10
    feats = np.zeros((n, 28, 28))
    rows_idx = np.arange(28)
    for i in range(n):
        u = rng.uniforms(8)
        scale = 3
        glyph = _GLYPHS[labels[i]].copy()
        # Stroke dropout: knock out the odd glyph cell.
        drop = rng.uniforms(35).reshape(7, 5) < 0.03
        glyph[drop] = 0.0
        block = np.kron(glyph, np.ones((scale, scale)))
        gh, gw = block.shape                   # 14x10 or 21x15
        room_y, room_x = 28 - gh, 28 - gw
        dy = int(u[1] * (2 * max_shift + 1)) - max_shift
        dx = int(u[2] * (2 * max_shift + 1)) - max_shift
        top = min(max(room_y // 2 + dy, 0), room_y)
        left = min(max(room_x // 2 + dx, 0), room_x)
        img = np.zeros((28, 28))
        img[top : top + gh, left : left + gw] = block
        # Slant: shift each row horizontally in proportion to its height.
        shear = (u[3] - 0.5) * 0.12
        offsets = np.round(shear * (rows_idx - 14)).astype(np.int64)
        cols = (rows_idx[:, None] * 0 + np.arange(28)[None, :] - offsets[:, None]) % 28
        img = np.take_along_axis(img, cols, axis=1)
        # Thickness: blend in the four-neighbour spread.
        blur = 0.7 * u[4]
        if blur > 0.0:
            spread = np.zeros_like(img)
            spread[1:, :] += img[:-1, :]
            spread[:-1, :] += img[1:, :]
            spread[:, 1:] += img[:, :-1]
            spread[:, :-1] += img[:, 1:]
            img = (1.0 - blur) * img + blur * 0.25 * spread
        intensity = 0.75 + 0.25 * u[5]
        # Low-frequency background smudge plus pixel noise.
        ridge = np.cumsum(rng.gaussians(28))
        ridge = (ridge - ridge.min()) / max(ridge.max() - ridge.min(), 1e-9)
        ramp = np.cumsum(rng.gaussians(28))
        ramp = (ramp - ramp.min()) / max(ramp.max() - ramp.min(), 1e-9)
        smudge = 0.5 * noise * u[6] * np.outer(ridge, ramp)
        img = img * intensity + smudge + noise * rng.gaussians(784).reshape(28, 28)
        feats[i] = np.clip(img, 0.0, 1.0)
    feats = np.round(feats * 255.0) / 255.0
    return Dataset(
        features=feats.reshape(n, 784), labels=labels, num_classes=10
    )


def split_shuffle(dataset: Dataset, test_fraction: float, rng: Prng) -> tuple[Dataset, Dataset]:
    """Shuffle deterministically and split off ``floor(n * test_fraction)`` test samples."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    perm = rng.permutation(len(dataset))
    n_test = int(len(dataset) * test_fraction)
    return dataset.subset(perm[n_test:]), dataset.subset(perm[:n_test])
