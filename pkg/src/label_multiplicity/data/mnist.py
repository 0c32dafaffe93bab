"""
MNIST IDX reader with two-class filtering.

IDX files are big-endian: a 4-byte magic number (``0x00000803`` for
images, ``0x00000801`` for labels), one 4-byte size per dimension, then
unsigned bytes.  Gzipped files (``*.gz``) are read transparently.

Functions
---------
read_idx_images : Pixel matrix from an image file.
read_idx_labels : Digit vector from a label file.
load_mnist_idx : Two-class Dataset with ±1 labels.
"""

from __future__ import annotations

import gzip
import logging
import struct
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from label_multiplicity.certify.errors import BadMagic, EmptyDataset, TruncatedFile
from label_multiplicity.certify.types import Dataset, LabelKind

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

# Size of the 1-vs-7 subset of the standard 60000-image training file.
MNIST17_TRAIN_COUNT = 13007


def _read_bytes(path: str | Path) -> bytes:
    p = Path(path)
    if p.suffix == ".gz":
        with gzip.open(p, "rb") as f:
            return f.read()
    return p.read_bytes()


def _header(raw: bytes, path: str | Path, magic: int, dims: int) -> tuple[int, ...]:
    size = 4 * (dims + 1)
    if len(raw) < size:
        raise TruncatedFile(f"{path}: header needs {size} bytes, file has {len(raw)}")
    found, *shape = struct.unpack(f">{dims + 1}I", raw[:size])
    if found != magic:
        raise BadMagic(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    return tuple(shape)


def read_idx_images(path: str | Path) -> NDArray[np.uint8]:
    """
    Read an IDX image file.

    Returns
    -------
    ndarray of uint8, shape (count, rows · cols)
        One flattened image per row.

    Raises
    ------
    BadMagic
        The file does not start with ``0x00000803``.
    TruncatedFile
        Fewer pixel bytes than the header promises.
    """
    raw = _read_bytes(path)
    count, rows, cols = _header(raw, path, IMAGES_MAGIC, 3)
    expected = count * rows * cols
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16)
    if pixels.size < expected:
        raise TruncatedFile(f"{path}: {pixels.size} pixel bytes, header promises {expected}")
    return pixels[:expected].reshape(count, rows * cols)


def read_idx_labels(path: str | Path) -> NDArray[np.uint8]:
    """Read an IDX label file (magic ``0x00000801``)."""
    raw = _read_bytes(path)
    (count,) = _header(raw, path, LABELS_MAGIC, 1)
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8)
    if labels.size < count:
        raise TruncatedFile(f"{path}: {labels.size} label bytes, header promises {count}")
    return labels[:count]


def load_mnist_idx(
    images_path: str | Path,
    labels_path: str | Path,
    classes: tuple[int, ...] = (1, 7),
) -> Dataset:
    """
    Load a two-class MNIST subset as a binary Dataset.

    Parameters
    ----------
    images_path, labels_path : str or Path
        IDX files, optionally gzipped.
    classes : tuple of int
        ``(positive digit, negative digit)``; the first maps to +1 and
        the second to −1.

    Returns
    -------
    Dataset
        784 pixel features scaled to ``[0, 1]``, binary labels.

    Raises
    ------
    EmptyDataset
        No class given, or no image of the requested classes.
    """
    if len(classes) == 0:
        raise EmptyDataset("no MNIST classes requested")
    if len(classes) != 2:
        raise ValueError(f"binary MNIST needs exactly two classes, got {classes}")
    pixels = read_idx_images(images_path)
    digits = read_idx_labels(labels_path)
    if pixels.shape[0] != digits.shape[0]:
        raise TruncatedFile(
            f"{images_path} has {pixels.shape[0]} images but {labels_path} "
            f"has {digits.shape[0]} labels"
        )
    positive, negative = classes
    keep = np.isin(digits, classes)
    if not keep.any():
        raise EmptyDataset(f"no images of digits {classes} in {labels_path}")
    features = pixels[keep].astype(np.float64) / 255.0
    labels = np.where(digits[keep] == positive, 1.0, -1.0)
    logger.info(
        "loaded %d MNIST images of digits %d/%d from %s",
        features.shape[0],
        positive,
        negative,
        images_path,
    )
    if classes == (1, 7) and digits.shape[0] == 60000 and features.shape[0] != MNIST17_TRAIN_COUNT:
        logger.warning(
            "expected %d training images of 1/7, found %d",
            MNIST17_TRAIN_COUNT,
            features.shape[0],
        )
    return Dataset(features, labels, LabelKind.BINARY)
