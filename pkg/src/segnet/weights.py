"""
"MSG1" weights codec.

Layout (little-endian)::

    b"MSG1"  u8 version(=1)  u32 layer_count
    per layer:
      u8 kind   1 = conv: u32 out, in, kh, kw, f32 weights[out*in*kh*kw], f32 bias[out]
                2 = batch-norm: u32 channels, f32 gamma, beta, running_mean, running_var
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from segnet.errors import WeightsFormatError
from segnet.layers import BatchNormStats
from segnet.network import Network, NetworkSpec

MAGIC = b"MSG1"
VERSION = 1
KIND_CONV = 1
KIND_BN = 2
_F32 = np.dtype("<f4")


def _layer_plan(spec: NetworkSpec) -> list[tuple[int, str, tuple[int, ...]]]:
    plan: list[tuple[int, str, tuple[int, ...]]] = []
    for prefix, out_c, in_c, k in spec.conv_layers():
        plan.append((KIND_CONV, prefix, (out_c, in_c, k, k)))
        if prefix != "head":
            plan.append((KIND_BN, prefix, (out_c,)))
    return plan


def encode_weights(net: Network) -> bytes:
    plan = _layer_plan(net.spec)
    chunks = [MAGIC, struct.pack("<BI", VERSION, len(plan))]
    for kind, prefix, shape in plan:
        chunks.append(struct.pack("<B", kind))
        chunks.append(struct.pack(f"<{len(shape)}I", *shape))
        if kind == KIND_CONV:
            arrays = [net.params[f"{prefix}.conv.w"], net.params[f"{prefix}.conv.b"]]
        else:
            stats = net.stats[prefix]
            arrays = [net.params[f"{prefix}.bn.gamma"], net.params[f"{prefix}.bn.beta"],
                      stats.running_mean, stats.running_var]
        chunks.extend(np.ascontiguousarray(a, dtype=_F32).tobytes() for a in arrays)
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self._pos + n > len(self._data):
            raise WeightsFormatError(f"truncated weights file while reading {what}")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def floats(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(count * 4, what), dtype=_F32).astype(np.float64)

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos


def decode_weights(data: bytes, spec: NetworkSpec | None = None, dtype: str = "float64") -> Network:
    """Rebuild a network for *spec* from MSG1 bytes.

    Raises
    ------
    WeightsFormatError
        Bad magic or version, truncation, trailing bytes, or any layer whose
        kind or shape differs from the architecture.
    """
    spec = spec or NetworkSpec()
    reader = _Reader(data)
    if reader.take(4, "magic") != MAGIC:
        raise WeightsFormatError("not an MSG1 weights file (bad magic)")
    version, count = reader.unpack("<BI", "header")
    if version != VERSION:
        raise WeightsFormatError(f"unsupported weights version {version}")
    plan = _layer_plan(spec)
    if count != len(plan):
        raise WeightsFormatError(f"weights file has {count} layers, architecture needs {len(plan)}")

    dt = np.dtype(dtype)
    params: dict[str, np.ndarray] = {}
    stats: dict[str, BatchNormStats] = {}
    for i, (kind, prefix, shape) in enumerate(plan):
        (found_kind,) = reader.unpack("<B", f"layer {i} kind")
        if found_kind != kind:
            raise WeightsFormatError(f"layer {i} ({prefix}): expected kind {kind}, found {found_kind}")
        found_shape = reader.unpack(f"<{len(shape)}I", f"layer {i} shape")
        if tuple(found_shape) != shape:
            raise WeightsFormatError(f"layer {i} ({prefix}): expected shape {shape}, found {tuple(found_shape)}")
        if kind == KIND_CONV:
            n = int(np.prod(shape))
            params[f"{prefix}.conv.w"] = reader.floats(n, f"{prefix} weights").reshape(shape).astype(dt)
            params[f"{prefix}.conv.b"] = reader.floats(shape[0], f"{prefix} bias").astype(dt)
        else:
            c = shape[0]
            params[f"{prefix}.bn.gamma"] = reader.floats(c, f"{prefix} gamma").astype(dt)
            params[f"{prefix}.bn.beta"] = reader.floats(c, f"{prefix} beta").astype(dt)
            stats[prefix] = BatchNormStats(
                reader.floats(c, f"{prefix} running mean").astype(dt),
                reader.floats(c, f"{prefix} running var").astype(dt),
            )
    if reader.remaining:
        raise WeightsFormatError(f"{reader.remaining} unexpected trailing bytes in weights file")
    return Network(spec, params, stats)


def save_weights(net: Network, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(encode_weights(net))
    return out


def load_weights(path: str | Path, spec: NetworkSpec | None = None, dtype: str = "float64") -> Network:
    return decode_weights(Path(path).read_bytes(), spec, dtype)
