"""PGM input, PFM disparity output and the learned-logit weight file."""
from __future__ import annotations

import os
import re
import struct

import numpy as np

from .errors import DimensionError, ParseError, WriteError
from .grid import DisparityMap

_WS = b" \t\r\n\v\f"


def _pgm_tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WS:
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        if pos >= n:
            raise ParseError("truncated PGM header", pos)
        start = pos
        while pos < n and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tok = data[start:pos]
        if not tok.isdigit():
            raise ParseError(f"expected an integer in PGM header, got {tok[:16]!r}", start)
        tokens.append(int(tok))
    return tokens, pos


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode a P2 or P5 PGM into an ``(H, W)`` float array scaled to ``[0, 1]``."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"bad PGM magic {magic!r}", 0)
    (width, height, maxval), pos = _pgm_tokens(data, 3, 2)
    if width < 1 or height < 1:
        raise ParseError(f"invalid PGM size {width}x{height}", pos)
    if not 0 < maxval <= 65535:
        raise ParseError(f"PGM maxval {maxval} outside 1..65535", pos)
    n = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WS:
            raise ParseError("missing whitespace after PGM maxval", pos)
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = n * dtype.itemsize
        if len(data) - pos < need:
            raise ParseError(f"truncated PGM raster: need {need} bytes, have {len(data) - pos}", len(data))
        values = np.frombuffer(data, dtype=dtype, count=n, offset=pos).astype(np.float64)
    else:
        body = data[pos:]
        found = [(m.start() + pos, m.group()) for m in re.finditer(rb"\S+", re.sub(rb"#[^\r\n]*", lambda m: b" " * len(m.group()), body))]
        if len(found) < n:
            raise ParseError(f"truncated PGM raster: need {n} samples, have {len(found)}", len(data))
        values = np.empty(n)
        for i, (off, tok) in enumerate(found[:n]):
            if not tok.isdigit():
                raise ParseError(f"bad PGM sample {tok[:16]!r}", off)
            values[i] = int(tok)
    if values.max(initial=0) > maxval:
        raise ParseError(f"PGM sample exceeds maxval {maxval}")
    return values.reshape(height, width) / maxval


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def write_pgm(img, path, maxval=255, binary=True):
    img = np.asarray(img, dtype=float)
    q = np.clip(np.rint(img * maxval), 0, maxval).astype(int)
    H, W = q.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(b"P5\n%d %d\n%d\n" % (W, H, maxval))
            fh.write(q.astype(">u2" if maxval > 255 else "u1").tobytes())
        else:
            fh.write(b"P2\n%d %d\n%d\n" % (W, H, maxval))
            for row in q:
                fh.write(" ".join(map(str, row)).encode() + b"\n")


def encode_pfm(dmap: DisparityMap) -> bytes:
    """Grayscale little-endian PFM, rows bottom-to-top, masked pixels as +inf."""
    values = np.where(dmap.mask, dmap.values, np.inf)
    if not np.all(np.isfinite(dmap.values[dmap.mask])):
        raise WriteError("disparity map has non-finite valid values")
    H, W = values.shape
    header = b"Pf\n%d %d\n-1.0\n" % (W, H)
    return header + np.ascontiguousarray(values[::-1], dtype="<f4").tobytes()


def decode_pfm(data: bytes) -> DisparityMap:
    lines = []
    pos = 0
    for _ in range(3):
        end = data.find(b"\n", pos)
        if end < 0:
            raise ParseError("truncated PFM header", pos)
        lines.append((pos, data[pos:end].strip()))
        pos = end + 1
    (_, magic), (size_off, size), (scale_off, scale) = lines
    if magic != b"Pf":
        raise ParseError(f"unsupported PFM magic {magic!r} (only grayscale 'Pf')", 0)
    try:
        W, H = (int(t) for t in size.split())
    except ValueError:
        raise ParseError(f"bad PFM size line {size!r}", size_off) from None
    try:
        s = float(scale)
    except ValueError:
        raise ParseError(f"bad PFM scale {scale!r}", scale_off) from None
    if s == 0 or W < 1 or H < 1:
        raise ParseError("invalid PFM size or scale", size_off)
    dtype = np.dtype("<f4" if s < 0 else ">f4")
    if len(data) - pos < W * H * 4:
        raise ParseError("truncated PFM raster", len(data))
    raw = np.frombuffer(data, dtype=dtype, count=W * H, offset=pos).reshape(H, W)[::-1]
    values = raw.astype(np.float64)
    mask = np.isfinite(values)
    values[~mask] = 0.0
    return DisparityMap(values, mask)


def write_pfm(dmap: DisparityMap, path):
    data = encode_pfm(dmap)
    with open(path, "wb") as fh:
        fh.write(data)


def read_pfm(path) -> DisparityMap:
    with open(path, "rb") as fh:
        return decode_pfm(fh.read())


# weight file: 16-byte little-endian header then float64 logits in order
# (SGA layer 0..n-1, each (4, 5, H, W, F); then LGA (H, W, 3K^2, F) if present)
WEIGHTS_MAGIC = b"GAWT"
WEIGHTS_VERSION = 1
_HEADER = struct.Struct("<4sBBBBII")


def save_logits(path, sga_logits, lga_logits=None):
    sga_logits = [np.asarray(a, dtype="<f8") for a in sga_logits]
    arrays = list(sga_logits)
    if sga_logits:
        H, W, F = sga_logits[0].shape[2], sga_logits[0].shape[3], sga_logits[0].shape[4]
    elif lga_logits is not None:
        H, W, F = lga_logits.shape[0], lga_logits.shape[1], lga_logits.shape[3]
    else:
        H = W = F = 0
    K = 0
    if lga_logits is not None:
        lga_logits = np.asarray(lga_logits, dtype="<f8")
        K = int(round(np.sqrt(lga_logits.shape[2] / 3)))
        if lga_logits.shape != (H, W, 3 * K * K, F):
            raise DimensionError("LGA logits do not match the SGA layer shape")
        arrays.append(lga_logits)
    if any(a.shape != (4, 5, H, W, F) for a in sga_logits):
        raise DimensionError("SGA layers differ in shape")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(WEIGHTS_MAGIC, WEIGHTS_VERSION, len(sga_logits), K, F, H, W))
        for a in arrays:
            fh.write(np.ascontiguousarray(a).tobytes())


def load_logits(path):
    """Return ``(sga_logits_list, lga_logits_or_None)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ParseError("truncated weight file header", len(data))
    magic, version, n_sga, K, F, H, W = _HEADER.unpack_from(data)
    if magic != WEIGHTS_MAGIC:
        raise ParseError(f"bad weight file magic {magic!r}", 0)
    if version != WEIGHTS_VERSION:
        raise ParseError(f"unsupported weight file version {version}", 4)
    shapes = [(4, 5, H, W, F)] * n_sga + ([(H, W, 3 * K * K, F)] if K else [])
    need = sum(int(np.prod(s)) for s in shapes) * 8
    if len(data) - _HEADER.size != need:
        raise ParseError(f"weight file body is {len(data) - _HEADER.size} bytes, expected {need}", _HEADER.size)
    pos = _HEADER.size
    arrays = []
    for s in shapes:
        n = int(np.prod(s))
        arrays.append(np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(s).astype(np.float64))
        pos += n * 8
    return arrays[:n_sga], (arrays[n_sga] if K else None)


def remove_quietly(path):
    try:
        os.remove(path)
    except FileNotFoundError:
        pass
