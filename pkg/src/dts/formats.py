"""Readers and writers for PFM, PGM16, 8-bit PNG/PPM and benchmark CSV."""

from __future__ import annotations

import csv
import io
import os
import re
from numbers import Number
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


class FormatError(ValueError):
    pass


class HeaderError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class ScaleError(FormatError):
    pass


class BitDepthError(FormatError):
    pass


def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    with open(source, "rb") as f:
        return f.read()


_PFM_HEADER = re.compile(rb"\A(P[Ff])\s+(\d+)\s+(\d+)\s+(\S+)\s")


def read_pfm(source, return_mask: bool = False):
    """Read a PFM from a path or bytes into ``(H, W)`` or ``(H, W, 3)`` float32.

    Non-finite samples (unknown disparity) are replaced by 0. With
    `return_mask`, also returns a float32 ``(H, W)`` map that is 1 where
    every channel was finite and 0 elsewhere.
    """
    buf = _read_bytes(source)
    m = _PFM_HEADER.match(buf)
    if m is None:
        raise HeaderError("not a PFM header (expected 'Pf' or 'PF', size and scale)")
    kind, w, h, scale_tok = m.groups()
    width, height = int(w), int(h)
    if width < 1 or height < 1:
        raise HeaderError(f"bad PFM size {width}x{height}")
    try:
        scale = float(scale_tok)
    except ValueError:
        raise HeaderError(f"bad PFM scale {scale_tok!r}") from None
    if scale == 0 or not np.isfinite(scale):
        raise ScaleError("PFM scale must be nonzero and finite")
    nch = 3 if kind == b"PF" else 1
    count = width * height * nch
    payload = buf[m.end():]
    if len(payload) < 4 * count:
        raise TruncatedError(f"PFM payload has {len(payload)} bytes, need {4 * count}")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(payload, dtype=dtype, count=count).astype(np.float32)
    shape = (height, width) if nch == 1 else (height, width, 3)
    img = np.flipud(data.reshape(shape)).copy()
    finite = np.isfinite(img)
    if not finite.all():
        img[~finite] = 0.0
    if return_mask:
        valid = finite if nch == 1 else finite.all(axis=2)
        return img, valid.astype(np.float32)
    return img


def pfm_bytes(img) -> bytes:
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        kind = "Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        kind = "PF"
    else:
        raise FormatError(f"PFM holds 1 or 3 channels, got shape {arr.shape}")
    h, w = arr.shape[:2]
    header = f"{kind}\n{w} {h}\n-1.0\n".encode("ascii")
    return header + np.flipud(arr).astype("<f4").tobytes()


def write_pfm(img, path) -> None:
    """Write little-endian PFM (scale -1.0), rows bottom to top."""
    Path(path).write_bytes(pfm_bytes(img))


def read_image(path) -> np.ndarray:
    """Read an 8-bit PNG/PPM/PGM as float32 in [0, 1]; RGB as ``(H, W, 3)``, gray as ``(H, W)``."""
    with PILImage.open(path) as im:
        if im.mode in ("I", "I;16", "I;16B", "I;16L", "F") or im.mode.startswith("I;"):
            raise BitDepthError(f"{path}: only 8-bit images are supported (mode {im.mode})")
        if im.mode in ("L", "RGB"):
            arr = np.asarray(im)
        elif im.mode == "LA":
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    if arr.dtype != np.uint8:
        raise BitDepthError(f"{path}: unsupported sample type {arr.dtype}")
    return arr.astype(np.float32) / 255.0


def to_uint8(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def write_image(img, path) -> None:
    """Write [0, 1] floats as 8-bit PNG or PPM/PGM (format from the extension)."""
    arr = to_uint8(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise FormatError(f"8-bit output holds 1 or 3 channels, got {arr.shape[2]}")
    ext = os.path.splitext(str(path))[1].lower()
    fmt = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}.get(ext)
    if fmt is None:
        raise FormatError(f"unknown image extension {ext!r}")
    PILImage.fromarray(arr).save(path, format=fmt)


def write_preview(depth, path) -> None:
    """Min-max normalized 8-bit preview of a single-channel map."""
    d = np.asarray(depth, dtype=np.float64)
    span = np.ptp(d)
    write_image((d - d.min()) / span if span > 0 else np.zeros_like(d), path)


def _pnm_tokens(buf: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise HeaderError("truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte ends the header


def read_pgm16(source) -> np.ndarray:
    """Read a binary PGM (P5) as raw float32 sample values, no normalization."""
    buf = _read_bytes(source)
    tokens, offset = _pnm_tokens(buf, 4)
    if tokens[0] != b"P5":
        raise HeaderError(f"expected P5, got {tokens[0]!r}")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise HeaderError("non-integer PGM header field") from None
    if w < 1 or h < 1:
        raise HeaderError(f"bad PGM size {w}x{h}")
    if not 1 <= maxval <= 65535:
        raise BitDepthError(f"unsupported PGM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    if len(buf) - offset < need:
        raise TruncatedError(f"PGM payload has {len(buf) - offset} bytes, need {need}")
    data = np.frombuffer(buf, dtype=dtype, count=w * h, offset=offset)
    return data.reshape(h, w).astype(np.float32)


def write_pgm16(img, path) -> None:
    """Write a 16-bit big-endian PGM; values rounded to nearest and clipped to [0, 65535]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise FormatError("PGM holds a single channel")
    h, w = arr.shape
    data = np.clip(np.rint(arr), 0, 65535).astype(">u2")
    Path(path).write_bytes(f"P5\n{w} {h}\n65535\n".encode("ascii") + data.tobytes())


def read_depth(path):
    """Load a depth/disparity map from PFM or PGM by extension."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".pfm":
        img = read_pfm(path)
        return img if img.ndim == 2 else img[:, :, 0]
    if ext == ".pgm":
        return read_pgm16(path)
    raise FormatError(f"depth maps must be .pfm or .pgm, got {ext!r}")


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, Number):
        return f"{float(v):.9g}" if not isinstance(v, int) else str(v)
    return str(v)


def csv_text(rows) -> str:
    keys: list[str] = []
    for rec in rows:
        for k in rec:
            if k not in keys:
                keys.append(k)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(keys)
    for rec in rows:
        writer.writerow([_fmt(rec[k]) if k in rec else "" for k in keys])
    return out.getvalue()


def write_csv(rows, path) -> None:
    """Header from keys in first-seen order; floats with 9 significant digits."""
    Path(path).write_text(csv_text(list(rows)))
