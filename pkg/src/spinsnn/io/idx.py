"""IDX tensor files (the MNIST container format)."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
_DTYPES = {0x08: np.uint8}
MAX_ITEMS = 1 << 31

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


@dataclass(frozen=True)
class IdxTensor:
    magic: int
    dims: tuple
    data: np.ndarray

    @property
    def is_images(self):
        return self.magic == IMAGE_MAGIC


def parse_idx(buf):
    """Parse an IDX byte string; the payload is returned as a read-only uint8 array."""
    buf = memoryview(bytes(buf))
    if len(buf) < 4:
        raise ParseError("file shorter than the 4-byte magic", len(buf))
    zero, dtype_code, ndim = struct.unpack_from(">HBB", buf, 0)
    magic = struct.unpack_from(">I", buf, 0)[0]
    if zero != 0 or dtype_code not in _DTYPES:
        raise ParseError(f"bad magic 0x{magic:08x}", 0)
    if magic not in (IMAGE_MAGIC, LABEL_MAGIC):
        raise ParseError(f"unsupported magic 0x{magic:08x} (expected 0x{IMAGE_MAGIC:08x} or 0x{LABEL_MAGIC:08x})", 0)
    header = 4 + 4 * ndim
    if len(buf) < header:
        raise ParseError(f"header truncated: need {header} bytes for {ndim} dimensions", len(buf))
    dims = struct.unpack_from(f">{ndim}I", buf, 4)
    total = 1
    for i, d in enumerate(dims):
        total *= d
        if total > MAX_ITEMS:
            raise ParseError(f"dimension product overflows {MAX_ITEMS}", 4 + 4 * i)
    end = header + total
    if len(buf) < end:
        raise ParseError(f"payload truncated: expected {total} bytes, found {len(buf) - header}", len(buf))
    if len(buf) > end:
        raise ParseError(f"{len(buf) - end} trailing bytes after the declared payload", end)
    data = np.frombuffer(buf, dtype=_DTYPES[dtype_code], count=total, offset=header).reshape(dims)
    return IdxTensor(magic, tuple(dims), data)


def read_idx(path):
    return parse_idx(Path(path).read_bytes())


def encode_idx(data):
    """Serialise a uint8 array as IDX (used by tests and fixtures)."""
    data = np.ascontiguousarray(data, dtype=np.uint8)
    return struct.pack(">HBB", 0, 0x08, data.ndim) + struct.pack(f">{data.ndim}I", *data.shape) + data.tobytes()


def load_mnist(directory, split="train"):
    """(images [n, 28, 28] uint8, labels [n] uint8) for ``split`` in {'train', 'test'}."""
    directory = Path(directory)
    names = (TRAIN_IMAGES, TRAIN_LABELS) if split == "train" else (TEST_IMAGES, TEST_LABELS)
    images = read_idx(directory / names[0])
    labels = read_idx(directory / names[1])
    if images.magic != IMAGE_MAGIC or labels.magic != LABEL_MAGIC:
        raise ParseError("image/label files swapped or mislabelled", 0)
    if images.dims[0] != labels.dims[0]:
        raise ParseError(f"{images.dims[0]} images but {labels.dims[0]} labels", 4)
    return images.data, labels.data
