"""File formats for clean data: one-record-per-line CSV for 1-D signals and
binary PGM (P5, 8- or 16-bit) for images, with writers for the built-in
synthetic datasets."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .tensor import as_tensor


def load_signal_dataset(path) -> list[np.ndarray]:
    """Parse comma-separated decimal reals, one signal per line."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"signal dataset {path} is empty")
    signals: list[np.ndarray] = []
    for number, line in enumerate(lines, start=1):
        fields = line.split(",")
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {number}: {exc}") from None
        signals.append(as_tensor(values))
    return signals


def save_signal_dataset(path, signals) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for signal in signals:
            handle.write(",".join(f"{v:.12g}" for v in np.asarray(signal).ravel()))
            handle.write("\n")


def _next_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Whitespace-delimited token, skipping '#' comments per the PGM spec."""
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise DataFormatError("unexpected end of header")
    return data[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """Binary PGM as a float64 image normalized to [0, 1] by maxval."""
    path = Path(path)
    data = path.read_bytes()
    try:
        if data[:2] != b"P5":
            raise DataFormatError("not a binary PGM (P5) file")
        pos = 2
        width_tok, pos = _next_pgm_token(data, pos)
        height_tok, pos = _next_pgm_token(data, pos)
        maxval_tok, pos = _next_pgm_token(data, pos)
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
        if width < 1 or height < 1:
            raise DataFormatError(f"bad dimensions {width}x{height}")
        if not 0 < maxval < 65536:
            raise DataFormatError(f"maxval {maxval} out of range")
        pos += 1  # single whitespace byte after maxval
        bytes_per_sample = 1 if maxval < 256 else 2
        expected = width * height * bytes_per_sample
        raw = data[pos : pos + expected]
        if len(raw) != expected:
            raise DataFormatError(f"expected {expected} sample bytes, found {len(raw)}")
        dtype = np.uint8 if bytes_per_sample == 1 else np.dtype(">u2")
        samples = np.frombuffer(raw, dtype=dtype).astype(np.float64)
        return (samples / maxval).reshape(height, width)
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def write_pgm(path, image: np.ndarray, maxval: int = 65535) -> None:
    """Write a [0, 1] image as binary PGM; 16-bit samples are big-endian."""
    if not 0 < maxval < 65536:
        raise ValueError(f"maxval {maxval} out of range")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    quantized = np.clip(np.round(image * maxval), 0, maxval)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode("ascii")
    if maxval < 256:
        payload = quantized.astype(np.uint8).tobytes()
    else:
        payload = quantized.astype(">u2").tobytes()
    Path(path).write_bytes(header + payload)


def load_image_dataset(directory) -> list[np.ndarray]:
    """All PGM images under a directory, in filename-sorted order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"{directory} is not a directory")
    paths = sorted(p for p in directory.iterdir() if p.is_file() and p.suffix == ".pgm")
    if not paths:
        raise ValueError(f"no PGM files in {directory}")
    return [read_pgm(p) for p in paths]
