"""Dataset ingestion: IDX files and a deterministic synthetic generator.

The IDX reader parses the big-endian image/label format (magics 0x00000803
and 0x00000801) and scales pixels to [0, 1]. The synthetic generator emits
Gaussian-blob classification data in the same 28x28 uint8 geometry so every
downstream path (CLI, harness, tests) consumes one format.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataFormatError

__all__ = ["load_idx", "write_idx", "synth_blobs"]

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read_u32s(buf: bytes, count: int, path, what: str) -> tuple[int, ...]:
    need = 4 * count
    if len(buf) < need:
        raise DataFormatError(f"{path}: truncated {what} header")
    return struct.unpack(f">{count}I", buf[:need])


def load_idx(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    """Load an IDX image/label pair as (float32 [n, rows*cols] in [0,1], labels).

    Raises DataFormatError naming the offending field on wrong magic,
    truncated payload, or image/label count mismatch.
    """
    img_buf = Path(images_path).read_bytes()
    magic, = _read_u32s(img_buf, 1, images_path, "images")
    if magic != IMAGES_MAGIC:
        raise DataFormatError(
            f"{images_path}: bad images magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"
        )
    _, n, rows, cols = _read_u32s(img_buf, 4, images_path, "images")
    payload = img_buf[16:]
    if len(payload) < n * rows * cols:
        raise DataFormatError(
            f"{images_path}: truncated pixel payload "
            f"({len(payload)} bytes for {n}x{rows}x{cols})"
        )
    images = np.frombuffer(payload, dtype=np.uint8, count=n * rows * cols)
    x = images.reshape(n, rows * cols).astype(np.float32) / 255.0

    lab_buf = Path(labels_path).read_bytes()
    magic, = _read_u32s(lab_buf, 1, labels_path, "labels")
    if magic != LABELS_MAGIC:
        raise DataFormatError(
            f"{labels_path}: bad labels magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"
        )
    _, n_labels = _read_u32s(lab_buf, 2, labels_path, "labels")
    lab_payload = lab_buf[8:]
    if len(lab_payload) < n_labels:
        raise DataFormatError(
            f"{labels_path}: truncated label payload "
            f"({len(lab_payload)} bytes for {n_labels} labels)"
        )
    if n_labels != n:
        raise DataFormatError(
            f"count mismatch: {n} images vs {n_labels} labels"
        )
    y = np.frombuffer(lab_payload, dtype=np.uint8, count=n_labels).copy()
    return x, y


def write_idx(images: np.ndarray, labels: np.ndarray,
              images_path, labels_path) -> None:
    """Write a uint8 image cube [n, rows, cols] and labels [n] as IDX files."""
    n, rows, cols = images.shape
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols))
        f.write(np.ascontiguousarray(images, dtype=np.uint8).tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABELS_MAGIC, n))
        f.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def synth_blobs(n: int, classes: int, seed: int, rows: int = 28, cols: int = 28,
                class_sep: float = 5.0, clusters_per_class: int = 2
                ) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic Gaussian-blob classification set in image geometry.

    Each class is a mixture of ``clusters_per_class`` Gaussian clusters in
    pixel space (so the decision boundary is not linear for >= 2 clusters).
    ``class_sep`` is the expected distance between two cluster centers in
    units of the per-pixel noise standard deviation. Returns (uint8 images
    [n, rows, cols], uint8 labels [n]); identical arguments always produce
    identical bytes.
    """
    if n < 1 or classes < 2 or classes > 256:
        raise ValueError(f"need n >= 1 and 2 <= classes <= 256, got n={n}, classes={classes}")
    rng = np.random.default_rng(seed)
    dim = rows * cols
    centers = rng.normal(0.0, 1.0, size=(classes, clusters_per_class, dim))

    labels = np.tile(np.arange(classes, dtype=np.uint8), n // classes + 1)[:n]
    labels = labels[rng.permutation(n)]
    cluster = rng.integers(0, clusters_per_class, size=n)
    noise = rng.normal(0.0, 1.0, size=(n, dim))
    x = centers[labels, cluster] * (class_sep / np.sqrt(2.0 * dim)) + noise
    images = np.clip(np.rint(127.5 + 40.0 * x), 0, 255).astype(np.uint8)
    return images.reshape(n, rows, cols), labels
