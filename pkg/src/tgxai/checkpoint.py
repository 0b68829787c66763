"""Versioned binary model checkpoints.

Layout: magic bytes ``XGD1``, a config block of little-endian (tag, value)
uint32 pairs terminated by tag 0, the parameter tensors as little-endian
float32 in declaration order, and a trailing little-endian uint64 checksum
(first 8 bytes of the SHA-256 of everything between the magic and the
checksum).

Config tags: 1 input channels, 2 height, 3 width, 4 block count, then per
block in order: 5 filter count, 6 pool flag, 7 relu flag.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .errors import CheckpointError
from .nn import ConvBlockSpec, ConvNet, ModelConfig

MAGIC = b"XGD1"

_TAG_END = 0
_TAG_IN_CHANNELS = 1
_TAG_HEIGHT = 2
_TAG_WIDTH = 3
_TAG_BLOCKS = 4
_TAG_FILTERS = 5
_TAG_POOL = 6
_TAG_RELU = 7


def _checksum(payload: bytes) -> int:
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


def _config_block(config: ModelConfig) -> bytes:
    pairs = [
        (_TAG_IN_CHANNELS, config.in_channels),
        (_TAG_HEIGHT, config.height),
        (_TAG_WIDTH, config.width),
        (_TAG_BLOCKS, len(config.blocks)),
    ]
    for b in config.blocks:
        pairs.append((_TAG_FILTERS, b.filters))
        pairs.append((_TAG_POOL, int(b.pool)))
        pairs.append((_TAG_RELU, int(b.relu)))
    pairs.append((_TAG_END, 0))
    return b"".join(struct.pack("<II", tag, value) for tag, value in pairs)


def save_checkpoint(net: ConvNet, path) -> None:
    parts = [_config_block(net.config)]
    for name, shape in net.config.param_shapes():
        tensor = net.params[name]
        if tensor.shape != shape:
            raise CheckpointError(f"parameter {name} has shape {tensor.shape}, expected {shape}")
        if not np.all(np.isfinite(tensor)):
            raise CheckpointError(f"parameter {name} contains non-finite values")
        parts.append(np.asarray(tensor, dtype="<f4").tobytes())
    payload = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<Q", _checksum(payload)))


def load_checkpoint(path) -> ConvNet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8:
        raise CheckpointError(f"checkpoint too short ({len(blob)} bytes): {path}")
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"bad magic {blob[:len(MAGIC)]!r} in {path}")
    payload = blob[len(MAGIC) : -8]
    (stored,) = struct.unpack("<Q", blob[-8:])
    if _checksum(payload) != stored:
        raise CheckpointError(f"checksum mismatch in {path}")

    fields: dict[int, int] = {}
    per_block: dict[int, list[int]] = {_TAG_FILTERS: [], _TAG_POOL: [], _TAG_RELU: []}
    pos = 0
    while True:
        if pos + 8 > len(payload):
            raise CheckpointError(f"config block not terminated in {path}")
        tag, value = struct.unpack_from("<II", payload, pos)
        pos += 8
        if tag == _TAG_END:
            break
        if tag in per_block:
            per_block[tag].append(value)
        elif tag in (_TAG_IN_CHANNELS, _TAG_HEIGHT, _TAG_WIDTH, _TAG_BLOCKS):
            fields[tag] = value
        else:
            raise CheckpointError(f"unknown config tag {tag} in {path}")

    try:
        n_blocks = fields[_TAG_BLOCKS]
        if not all(len(per_block[t]) == n_blocks for t in per_block):
            raise CheckpointError(f"config lists {len(per_block[_TAG_FILTERS])} blocks, header says {n_blocks}")
        config = ModelConfig(
            in_channels=fields[_TAG_IN_CHANNELS],
            height=fields[_TAG_HEIGHT],
            width=fields[_TAG_WIDTH],
            blocks=tuple(
                ConvBlockSpec(filters=f, pool=bool(p), relu=bool(r))
                for f, p, r in zip(per_block[_TAG_FILTERS], per_block[_TAG_POOL], per_block[_TAG_RELU])
            ),
        )
    except KeyError as exc:
        raise CheckpointError(f"missing config tag {exc} in {path}") from None
    except ValueError as exc:
        raise CheckpointError(f"invalid config in {path}: {exc}") from None

    params = {}
    for name, shape in config.param_shapes():
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if pos + nbytes > len(payload):
            raise CheckpointError(f"truncated parameter {name} in {path}")
        flat = np.frombuffer(payload, dtype="<f4", count=count, offset=pos)
        params[name] = flat.astype(float).reshape(shape)
        pos += nbytes
    if pos != len(payload):
        raise CheckpointError(f"{len(payload) - pos} trailing bytes after parameters in {path}")
    return ConvNet(config=config, params=params)
