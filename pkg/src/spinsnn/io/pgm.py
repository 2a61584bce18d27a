"""Binary PGM (P5) output for weight maps."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

MAP_SHAPE = (28, 28)


def to_gray(values):
    """Map [0, 1] linearly onto 0..255 with round-half-up (0.5 -> 128)."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def encode_pgm(pixels):
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    if pixels.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def decode_pgm(data):
    """Inverse of :func:`encode_pgm` for the header layout it writes."""
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise ValueError("not a P5 PGM written by encode_pgm")
    w, h = (int(x) for x in parts[1].split())
    body = parts[3]
    if len(body) != w * h:
        raise ValueError(f"PGM payload has {len(body)} bytes, expected {w * h}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def write_pgm(path, pixels):
    Path(path).write_bytes(encode_pgm(pixels))


def montage(maps, pad=1):
    """Tile ``(n, h, w)`` maps on a ceil(sqrt(n)) square grid with ``pad`` black pixels between."""
    maps = np.asarray(maps, dtype=np.uint8)
    n, h, w = maps.shape
    side = math.ceil(math.sqrt(n))
    out = np.zeros((side * (h + pad) - pad, side * (w + pad) - pad), dtype=np.uint8)
    for k in range(n):
        r, c = divmod(k, side)
        out[r * (h + pad):r * (h + pad) + h, c * (w + pad):c * (w + pad) + w] = maps[k]
    return out


def emit_weight_maps(weights, directory, shape=MAP_SHAPE):
    """Write ``neuron_XXX.pgm`` per column of ``weights`` and ``montage.pgm``; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    weights = np.asarray(weights)
    maps = to_gray(weights.T.reshape(-1, *shape))
    paths = []
    for k, m in enumerate(maps):
        p = directory / f"neuron_{k:03d}.pgm"
        write_pgm(p, m)
        paths.append(p)
    p = directory / "montage.pgm"
    write_pgm(p, montage(maps))
    paths.append(p)
    return paths
