"""Binary checkpoint of named float64 tensors.

Layout (little-endian, no padding)::

    b"ESEFNCKP" | u32 version=1 | u32 count
    count x ( u16 name_len | name (utf-8) | u8 rank | u32 dims[rank] | f64 payload[prod(dims)] )
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .attention import CNetParams, MNetParams, SEBlockParams
from .errors import ConfigurationError, DimensionError, FormatError, NonFiniteError
from .fusion import EseFnParams
from .layers import MLP, Conv1d, ConvTranspose1d, Linear
from .tensor import Tensor

MAGIC = b"ESEFNCKP"
VERSION = 1


def encode_tensors(named: list[tuple[str, np.ndarray]]) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(named))]
    for name, arr in named:
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype=np.float64)
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(arr.astype("<f8").tobytes(order="C"))
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        if self.pos + size > len(self.buf):
            raise FormatError(f"truncated {what} at offset {self.pos}: need {size} bytes, {len(self.buf) - self.pos} left")
        chunk = self.buf[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_tensors(buf: bytes) -> dict[str, np.ndarray]:
    r = _Reader(buf)
    magic = r.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0")
    (version,) = r.unpack("<I", "version")
    if version != VERSION:
        raise FormatError(f"unsupported version {version} at offset {len(MAGIC)}")
    (count,) = r.unpack("<I", "tensor count")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        start = r.pos
        (name_len,) = r.unpack("<H", "name length")
        try:
            name = r.take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"tensor name at offset {start + 2} is not utf-8") from None
        if name in out:
            raise FormatError(f"duplicate tensor {name!r} at offset {start}")
        (rank,) = r.unpack("<B", "rank")
        if rank > 3:
            raise FormatError(f"tensor {name!r} has rank {rank} at offset {r.pos - 1}")
        dims = r.unpack(f"<{rank}I", "dims")
        size = int(np.prod(dims, dtype=np.int64))
        payload = r.take(8 * size, f"payload of {name!r}")
        out[name] = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
    if r.pos != len(buf):
        raise FormatError(f"trailing bytes at offset {r.pos}")
    return out


def save_checkpoint(params, path: str | Path) -> None:
    named = [(name, t.data) for name, t in params.named_parameters()]
    Path(path).write_bytes(encode_tensors(named))


def _linear(t: dict, prefix: str) -> Linear:
    return Linear(Tensor(t[f"{prefix}.weight"], True), Tensor(t[f"{prefix}.bias"], True))


def _conv(t: dict, prefix: str) -> Conv1d:
    w = t[f"{prefix}.weight"]
    return Conv1d(Tensor(w, True), Tensor(t[f"{prefix}.bias"], True), 1, w.shape[2] // 2)


def _build(t: dict) -> EseFnParams:
    proj_r = MLP(_linear(t, "proj_r.fc1"), _linear(t, "proj_r.fc2"))
    proj_s = MLP(_linear(t, "proj_s.fc1"), _linear(t, "proj_s.fc2"))
    d = proj_r.fc2.out_features
    n = 2
    if "mnet.conv3.weight" in t:
        fc4 = _linear(t, "mnet.fc4")
        mnet = MNetParams(
            _conv(t, "mnet.conv3"), _conv(t, "mnet.conv2"), _conv(t, "mnet.conv1"),
            fc4, _linear(t, "mnet.fc3"), n, d, fc4.in_features // fc4.out_features,
        )
    elif "mnet.fc_reduce.weight" in t:
        down = _linear(t, "mnet.fc_reduce")
        mnet = SEBlockParams(down, _linear(t, "mnet.fc_expand"), down.in_features // down.out_features)
    else:
        mnet = None
    if "cnet.conv4.weight" in t:
        fc6 = _linear(t, "cnet.fc6")
        conv4 = ConvTranspose1d(Tensor(t["cnet.conv4.weight"], True), Tensor(t["cnet.conv4.bias"], True))
        cnet = CNetParams(conv4, fc6, _linear(t, "cnet.fc5"), d, n, fc6.in_features // fc6.out_features)
    elif "cnet.fc_reduce.weight" in t:
        down = _linear(t, "cnet.fc_reduce")
        cnet = SEBlockParams(down, _linear(t, "cnet.fc_expand"), down.in_features // down.out_features)
    else:
        cnet = None
    return EseFnParams(proj_r, proj_s, mnet, cnet, _linear(t, "head_r"), _linear(t, "head_s"), _linear(t, "head_rs"))


def load_checkpoint(path: str | Path) -> EseFnParams:
    """Rebuild the network from a checkpoint; the architecture is inferred from tensor names and shapes."""
    tensors = decode_tensors(Path(path).read_bytes())
    try:
        params = _build(tensors)
    except KeyError as exc:
        raise FormatError(f"checkpoint is missing tensor {exc.args[0]!r}") from None
    except (ConfigurationError, DimensionError, NonFiniteError) as exc:
        raise FormatError(f"checkpoint tensors are inconsistent: {exc}") from None
    expected = {name for name, _ in params.named_parameters()}
    extra = set(tensors) - expected
    if extra:
        raise FormatError(f"checkpoint has unexpected tensors {sorted(extra)}")
    return params
