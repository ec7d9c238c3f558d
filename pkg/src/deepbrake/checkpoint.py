"""Binary checkpoint container.

Layout, all integers and floats little-endian::

    8 bytes   magic  b"DQNBRAKE"
    u32       format version (currently 1)
    u32       number of layer sizes n
    n x u32   layer sizes, input first
    u32       byte length k of the embedded config
    k bytes   config text (UTF-8, ``key = value`` lines)
    u64       parameter count P
    P x f64   network parameters: W0, b0, W1, b1, ... each row-major,
              W_i of shape (sizes[i], sizes[i+1])
    P x f64   RMSProp mean-square accumulators, same layout

Nothing may follow the accumulators. Floats are stored raw, so a save/load
round trip is bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .config import Config, format_config, parse_config
from .net import QNetworkParams, RMSProp, param_count

__all__ = ["Checkpoint", "CheckpointError", "save_checkpoint", "load_checkpoint",
           "MAGIC", "VERSION"]

MAGIC = b"DQNBRAKE"
VERSION = 1
_F64 = np.dtype("<f8")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    params: QNetworkParams
    optimizer: RMSProp
    config: Config


def save_checkpoint(path, params: QNetworkParams, optimizer: RMSProp, config: Config):
    sizes = params.sizes
    if tuple(config.layer_sizes) != tuple(sizes):
        raise CheckpointError(f"config layer sizes {config.layer_sizes} != network {sizes}")
    text = format_config(config).encode("utf-8")
    header = [MAGIC, struct.pack("<II", VERSION, len(sizes)),
              struct.pack(f"<{len(sizes)}I", *sizes),
              struct.pack("<I", len(text)), text,
              struct.pack("<Q", params.n_params)]
    with open(path, "wb") as fh:
        fh.write(b"".join(header))
        fh.write(params.flat.astype(_F64, copy=False).tobytes())
        fh.write(optimizer.acc.astype(_F64, copy=False).tobytes())


class _Reader:
    def __init__(self, data):
        self.data, self.pos = data, 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise CheckpointError(f"truncated checkpoint while reading {what}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_checkpoint(path, expect: Config | None = None) -> Checkpoint:
    """Read and validate a checkpoint.

    ``expect`` (optional) must describe the same network sizes as the file.
    """
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, n = r.unpack("<II", "header")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    sizes = r.unpack(f"<{n}I", "layer sizes")
    (k,) = r.unpack("<I", "config length")
    try:
        config = parse_config(r.take(k, "config").decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise CheckpointError(f"corrupt embedded config: {exc}") from None
    if tuple(config.layer_sizes) != tuple(sizes):
        raise CheckpointError(f"layer-size header {sizes} does not match embedded "
                              f"config {config.layer_sizes}")
    if expect is not None and tuple(expect.layer_sizes) != tuple(sizes):
        raise CheckpointError(f"network size mismatch: checkpoint has {sizes}, "
                              f"config expects {expect.layer_sizes}")
    (count,) = r.unpack("<Q", "parameter count")
    if count != param_count(sizes):
        raise CheckpointError(f"parameter count {count} does not match sizes {sizes}")
    flat = np.frombuffer(r.take(8 * count, "parameters"), dtype=_F64)
    acc = np.frombuffer(r.take(8 * count, "optimizer state"), dtype=_F64)
    if r.pos != len(r.data):
        raise CheckpointError(f"{len(r.data) - r.pos} unexpected trailing bytes")
    params = QNetworkParams.from_flat(flat, sizes)
    opt = RMSProp(params, config.learning_rate, config.rmsprop_decay, config.rmsprop_eps)
    opt.acc[...] = acc
    return Checkpoint(params, opt, config)
