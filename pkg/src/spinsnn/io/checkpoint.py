"""Network checkpoints: text header, little-endian float64 payload, trailing sha256.

Layout::

    SPINSNN-CHECKPOINT <version>
    key value            (one per line: config_hash, images_trained, clock,
    ...                   n_input, n_exc, energy_events, energy_joule, energy_supply)
    <blank line>
    payload              wall positions (n_input x n_exc, m), exc adaptation, inh adaptation
    sha256 digest        32 raw bytes over everything before it

Image streams are derived from (seed, phase, image index), so ``images_trained``
is the whole random-stream state.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from ..device import EnergyRecord
from ..dynamics import NeuronState
from ..errors import CheckpointError
from .config import build_network

MAGIC = "SPINSNN-CHECKPOINT"
VERSION = 1
_INT_KEYS = ("images_trained", "clock", "n_input", "n_exc", "energy_events", "energy_joule", "energy_supply")


def encode_checkpoint(net, config_hash):
    exc_a = np.broadcast_to(np.asarray(net.exc.a, dtype="<f8"), (net.cfg.n_exc,))
    inh_a = np.broadcast_to(np.asarray(net.inh.a, dtype="<f8"), (net.cfg.n_exc,))
    payload = (np.ascontiguousarray(net.devices.x, dtype="<f8").tobytes() + exc_a.tobytes() + inh_a.tobytes())
    state = net.energy.state()
    header = [f"{MAGIC} {VERSION}", f"config_hash {config_hash}", f"images_trained {net.images_trained}",
              f"clock {net.clock}", f"n_input {net.cfg.n_input}", f"n_exc {net.cfg.n_exc}",
              f"energy_events {state['event_count']}", f"energy_joule {state['joule']}",
              f"energy_supply {state['supply']}", "", ""]
    body = "\n".join(header).encode("ascii") + payload
    return body + hashlib.sha256(body).digest()


def save_checkpoint(net, path, config_hash):
    Path(path).write_bytes(encode_checkpoint(net, config_hash))


def decode_checkpoint(data):
    """Validated ``(header dict, positions, exc_a, inh_a)``."""
    if len(data) < 32:
        raise CheckpointError("checkpoint truncated")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch (file corrupted)")
    head, sep, payload = body.partition(b"\n\n")
    if not sep:
        raise CheckpointError("checkpoint header not terminated")
    lines = head.decode("ascii").split("\n")
    magic, _, version = lines[0].partition(" ")
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file")
    if version != str(VERSION):
        raise CheckpointError(f"checkpoint format version {version}, expected {VERSION}")
    header = dict(line.split(" ", 1) for line in lines[1:])
    try:
        for k in _INT_KEYS:
            header[k] = int(header[k])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"bad checkpoint header: {exc}") from exc
    n_in, n_exc = header["n_input"], header["n_exc"]
    if len(payload) != 8 * (n_in * n_exc + 2 * n_exc):
        raise CheckpointError("checkpoint payload size does not match its dimensions")
    arr = np.frombuffer(payload, dtype="<f8")
    x = arr[:n_in * n_exc].reshape(n_in, n_exc)
    return header, x, arr[n_in * n_exc:n_in * n_exc + n_exc], arr[n_in * n_exc + n_exc:]


def load_checkpoint(path, cfg, keep_events=False):
    """Rebuild the network of RunConfig ``cfg`` from ``path``; the config hash must match."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    header, x, exc_a, inh_a = decode_checkpoint(data)
    if header["config_hash"] != cfg.hash():
        raise CheckpointError(f"config hash mismatch: checkpoint {header['config_hash'][:12]}..., "
                              f"run {cfg.hash()[:12]}...")
    if (header["n_input"], header["n_exc"]) != (cfg.network.n_input, cfg.network.n_exc):
        raise CheckpointError("checkpoint dimensions differ from the config")
    net = build_network(cfg, keep_events=keep_events)
    net.devices.x[:] = x
    n = cfg.network.n_exc
    net.exc = NeuronState(net.exc.v, exc_a.copy(), np.zeros(n, dtype=np.int64))
    net.inh = NeuronState(net.inh.v, inh_a.copy(), np.zeros(n, dtype=np.int64))
    net.images_trained = header["images_trained"]
    net.clock = header["clock"]
    net.devices.energy = EnergyRecord.from_state({"event_count": header["energy_events"],
                                                  "joule": header["energy_joule"],
                                                  "supply": header["energy_supply"]})
    return net
