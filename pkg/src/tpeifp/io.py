"""File formats: IFPM raw matrices, 16-bit PGM previews and position CSVs.

IFPM layout (little-endian): magic ``b"IFPM"``, version u16, reserved u16,
rows u32, cols u32, then ``rows * cols`` float64 samples in row-major order.
"""
import csv
import io
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError
from .grid import ShiftVector, as_grid

MAGIC = b"IFPM"
VERSION = 1
HEADER = struct.Struct("<4sHHII")
MAX_SAMPLES = 1 << 31
CSV_HEADER = ["frame", "dx_px", "dy_px", "confidence"]


def atomic_write_bytes(path, data):
    """Write ``data`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def matrix_bytes(img):
    a = as_grid(img)
    rows, cols = a.shape
    if rows > 0xFFFFFFFF or cols > 0xFFFFFFFF:
        raise FormatError(f"matrix {rows}x{cols} does not fit the IFPM header")
    return HEADER.pack(MAGIC, VERSION, 0, rows, cols) + a.astype("<f8").tobytes()


def parse_matrix(data):
    if len(data) < HEADER.size:
        raise FormatError(f"truncated IFPM header ({len(data)} bytes)")
    magic, version, _reserved, rows, cols = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported IFPM version {version}")
    if rows == 0 or cols == 0 or rows * cols > MAX_SAMPLES:
        raise FormatError(f"invalid IFPM dimensions {rows}x{cols}")
    expected = rows * cols * 8
    payload = len(data) - HEADER.size
    if payload != expected:
        raise FormatError(f"IFPM payload is {payload} bytes, expected {expected}")
    a = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(rows, cols)
    return a.astype(np.float64)


def encode_matrix(img, path):
    atomic_write_bytes(path, matrix_bytes(img))


def decode_matrix(path):
    return parse_matrix(Path(path).read_bytes())


def pgm_bytes(img):
    """Binary P5 PGM, maxval 65535, min-max scaled (constant images map to 0)."""
    a = as_grid(img)
    lo, hi = a.min(), a.max()
    scaled = (a - lo) / (hi - lo) if hi > lo else np.zeros_like(a)
    pix = np.round(scaled * 65535).astype(">u2")
    rows, cols = a.shape
    return f"P5\n{cols} {rows}\n65535\n".encode("ascii") + pix.tobytes()


def write_pgm(img, path):
    atomic_write_bytes(path, pgm_bytes(img))


def read_pgm(path):
    """Read a 16-bit P5 file written by :func:`write_pgm` (no comments)."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise FormatError("not a binary PGM")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 65535:
        raise FormatError(f"expected maxval 65535, got {maxval}")
    body = data[len(data) - rows * cols * 2:]
    return np.frombuffer(body, dtype=">u2").reshape(rows, cols).astype(np.uint16)


def _fmt_conf(c):
    if c is None or (isinstance(c, float) and math.isnan(c)):
        return ""
    return repr(float(c))


def positions_csv_text(shifts, confidence=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    if confidence is None:
        confidence = [None] * len(shifts)
    if len(confidence) != len(shifts):
        raise FormatError("confidence list length differs from shifts")
    for n, (s, c) in enumerate(zip(shifts, confidence)):
        w.writerow([n, int(s[0]), int(s[1]), _fmt_conf(c)])
    return buf.getvalue()


def write_positions_csv(result, path):
    """Write an ExtractionResult, or a plain list of shifts (ground truth)."""
    if hasattr(result, "shifts"):
        text = positions_csv_text(result.shifts, result.confidence)
    else:
        text = positions_csv_text(result)
    atomic_write_bytes(path, text.encode("ascii"))


def _parse_int(text, row, column):
    try:
        v = float(text)
    except ValueError:
        raise FormatError(f"row {row}: {column} {text!r} is not numeric") from None
    if not math.isfinite(v) or v != int(v):
        raise FormatError(f"row {row}: {column} {text!r} is not an integer")
    return int(v)


def read_positions_csv(path):
    """Return ``(shifts, confidence)``; missing confidence reads as ``None``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise FormatError(f"row 1: expected header {','.join(CSV_HEADER)}")
    shifts, confidence = [], []
    for i, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != 4:
            raise FormatError(f"row {i}: expected 4 fields, got {len(r)}")
        frame = _parse_int(r[0], i, "frame")
        if frame != len(shifts):
            raise FormatError(f"row {i}: frame {frame} out of sequence")
        shifts.append(ShiftVector(_parse_int(r[1], i, "dx_px"), _parse_int(r[2], i, "dy_px")))
        c = r[3].strip()
        if c:
            try:
                confidence.append(float(c))
            except ValueError:
                raise FormatError(f"row {i}: confidence {c!r} is not numeric") from None
        else:
            confidence.append(None)
    return shifts, confidence
