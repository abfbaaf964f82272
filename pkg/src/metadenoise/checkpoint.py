"""Model checkpoints.

Layout: magic "MDNZ1" (5 bytes), format version (1 byte), a u32-LE
length-prefixed UTF-8 network descriptor, the parameter count as u64 LE,
then the parameters as little-endian float64. The descriptor is the
canonical text rendering of the network spec and round-trips exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .nets import DenoiserModel, LayerSpec, NetworkSpec

MAGIC = b"MDNZ1"
FORMAT_VERSION = 1


def render_network_spec(spec: NetworkSpec) -> str:
    """Canonical one-line descriptor, e.g.
    ``residual=0;fc:30:150,relu,fc:150:30,linear``."""
    parts = []
    for layer in spec.layers:
        if layer.kind == "fc":
            parts.append(f"fc:{layer.in_size}:{layer.out_size}")
        elif layer.kind == "conv2d":
            parts.append(f"conv2d:{layer.in_size}:{layer.out_size}:{layer.kernel}")
        else:
            parts.append(layer.kind)
    return f"residual={int(spec.residual)};" + ",".join(parts)


def parse_network_spec(text: str) -> NetworkSpec:
    try:
        head, _, body = text.partition(";")
        if not head.startswith("residual=") or not body:
            raise DataFormatError(f"malformed network descriptor {text!r}")
        residual = bool(int(head.removeprefix("residual=")))
        layers: list[LayerSpec] = []
        for token in body.split(","):
            fields = token.split(":")
            kind = fields[0]
            if kind == "fc":
                layers.append(LayerSpec("fc", in_size=int(fields[1]), out_size=int(fields[2])))
            elif kind == "conv2d":
                layers.append(
                    LayerSpec(
                        "conv2d",
                        in_size=int(fields[1]),
                        out_size=int(fields[2]),
                        kernel=int(fields[3]),
                    )
                )
            elif kind in ("relu", "linear") and len(fields) == 1:
                layers.append(LayerSpec(kind))
            else:
                raise DataFormatError(f"unknown layer token {token!r}")
        return NetworkSpec(tuple(layers), residual=residual)
    except (IndexError, ValueError) as exc:
        raise DataFormatError(f"malformed network descriptor {text!r}: {exc}") from None


def save_checkpoint(model: DenoiserModel, path) -> None:
    descriptor = render_network_spec(model.spec).encode("utf-8")
    params = np.ascontiguousarray(model.params, dtype="<f8")
    blob = (
        MAGIC
        + struct.pack("<B", FORMAT_VERSION)
        + struct.pack("<I", len(descriptor))
        + descriptor
        + struct.pack("<Q", params.size)
        + params.tobytes()
    )
    Path(path).write_bytes(blob)


def load_checkpoint(path) -> DenoiserModel:
    path = Path(path)
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise DataFormatError(f"{path}: bad magic, not a checkpoint file")
    pos = len(MAGIC)
    if len(data) < pos + 1:
        raise DataFormatError(f"{path}: truncated before version byte")
    (version,) = struct.unpack_from("<B", data, pos)
    pos += 1
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version}")
    if len(data) < pos + 4:
        raise DataFormatError(f"{path}: truncated descriptor length")
    (desc_len,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if len(data) < pos + desc_len:
        raise DataFormatError(f"{path}: truncated descriptor")
    spec = parse_network_spec(data[pos : pos + desc_len].decode("utf-8"))
    pos += desc_len
    if len(data) < pos + 8:
        raise DataFormatError(f"{path}: truncated parameter count")
    (count,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if count != spec.n_params:
        raise DataFormatError(
            f"{path}: parameter count {count} does not match descriptor ({spec.n_params})"
        )
    payload = data[pos:]
    if len(payload) != count * 8:
        raise DataFormatError(
            f"{path}: parameter payload is {len(payload)} bytes, expected {count * 8}"
        )
    params = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return DenoiserModel(spec, params)
