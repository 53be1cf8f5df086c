"""Image file codecs: PFM (float), Radiance RGBE (.hdr), and a PNG subset.

All three are implemented here rather than pulled from an imaging library so
decode failures map onto a precise error taxonomy and never escape as raw
struct/index errors:

* ``HeaderError``      -- malformed or missing header fields
* ``UnsupportedError`` -- valid file, but a variant outside the supported subset
* ``PayloadError``     -- truncated or internally inconsistent pixel data
* ``ChecksumError``    -- stored CRC does not match the payload

Every decoder accepts arbitrary bytes without raising anything outside
``FormatError`` (and maps OS-level read failures through normally).

Format notes live in docs/formats.md.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

MAX_DIM = 1 << 16  # refuse absurd headers before allocating


class FormatError(Exception):
    """Base class for all decode errors raised by this module."""


class HeaderError(FormatError):
    pass


class UnsupportedError(FormatError):
    pass


class PayloadError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


def _read_bytes(path) -> bytes:
    return Path(path).read_bytes()


# ---------------------------------------------------------------------------
# PFM -- float32, lossless
# ---------------------------------------------------------------------------

def write_pfm(path, img: np.ndarray) -> None:
    """Write (H, W, 3) or (H, W) float data as little-endian PFM.

    Data is converted to float32; rows are stored bottom-to-top per the
    format convention, so write/read round-trips bit-exactly.
    """
    img = np.asarray(img)
    if img.ndim == 3 and img.shape[2] == 3:
        magic = b"PF"
    elif img.ndim == 2:
        magic = b"Pf"
    else:
        raise ValueError(f"PFM supports (H, W) or (H, W, 3), got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("PFM payload must be finite")
    data = np.ascontiguousarray(img[::-1], dtype="<f4")
    h, w = img.shape[0], img.shape[1]
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{w} {h}\n".encode())
        f.write(b"-1.0\n")
        f.write(data.tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM file: returns float32 (H, W, 3) for PF, (H, W) for Pf."""
    return decode_pfm(_read_bytes(path))


def decode_pfm(raw: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    # header = exactly 4 whitespace-separated tokens, then a single
    # whitespace byte, then the raster
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise HeaderError("truncated PFM header")
        tokens.append(raw[start:pos])
    if pos >= len(raw):
        raise PayloadError("PFM raster missing")
    pos += 1  # the single whitespace after the scale token

    magic = tokens[0]
    if magic not in (b"PF", b"Pf"):
        raise HeaderError(f"not a PFM file (magic {magic!r})")
    channels = 3 if magic == b"PF" else 1
    try:
        w = int(tokens[1])
        h = int(tokens[2])
        scale = float(tokens[3])
    except ValueError as e:
        raise HeaderError(f"malformed PFM dimensions/scale: {e}") from None
    if w <= 0 or h <= 0 or w > MAX_DIM or h > MAX_DIM:
        raise HeaderError(f"unreasonable PFM dimensions {w}x{h}")
    if scale == 0 or not np.isfinite(scale):
        raise HeaderError(f"invalid PFM scale {scale}")

    count = w * h * channels
    need = count * 4
    body = raw[pos:pos + need]
    if len(body) != need:
        raise PayloadError(f"PFM raster truncated: need {need} bytes, have {len(body)}")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(body, dtype=dtype).astype(np.float32)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return data.reshape(shape)[::-1].copy()


# ---------------------------------------------------------------------------
# Radiance RGBE (.hdr)
# ---------------------------------------------------------------------------

def _float_to_rgbe(rgb: np.ndarray) -> np.ndarray:
    """(W, 3) float -> (W, 4) uint8 shared-exponent encoding."""
    out = np.zeros((rgb.shape[0], 4), dtype=np.uint8)
    v = rgb.max(axis=1)
    live = v >= 1e-32
    if np.any(live):
        mant, exp = np.frexp(v[live])
        scale = mant * 256.0 / v[live]
        enc = np.minimum(np.round(rgb[live] * scale[:, None]), 255.0)
        out[live, :3] = enc.astype(np.uint8)
        out[live, 3] = (exp + 128).astype(np.uint8)
    return out


def _rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    rgbe = rgbe.astype(np.float64)
    exp = rgbe[..., 3]
    scale = np.where(exp > 0, np.ldexp(1.0, (exp - 136).astype(np.int64)), 0.0)
    return rgbe[..., :3] * scale[..., None]


def write_hdr(path, img: np.ndarray) -> None:
    """Write (H, W, 3) linear radiance as a run-length encoded .hdr file."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"HDR wants (H, W, 3), got {img.shape}")
    if not np.all(np.isfinite(img)) or np.any(img < 0):
        raise ValueError("HDR payload must be finite and non-negative")
    h, w = img.shape[:2]
    parts = [b"#?RADIANCE\n", b"FORMAT=32-bit_rle_rgbe\n", b"\n",
             f"-Y {h} +X {w}\n".encode()]
    rle_ok = 8 <= w < 32768
    for row in img:
        quad = _float_to_rgbe(row)
        if not rle_ok:
            parts.append(quad.tobytes())
            continue
        parts.append(bytes([2, 2, (w >> 8) & 0xFF, w & 0xFF]))
        for ch in range(4):
            parts.append(_rle_encode(quad[:, ch]))
    Path(path).write_bytes(b"".join(parts))


def _rle_encode(vals: np.ndarray) -> bytes:
    """Radiance new-style RLE for one channel of one scanline."""
    out = bytearray()
    n = len(vals)
    i = 0
    while i < n:
        # find a run of >= 4 identical bytes
        run_start = i
        while run_start < n:
            run_len = 1
            while (run_start + run_len < n and run_len < 127
                   and vals[run_start + run_len] == vals[run_start]):
                run_len += 1
            if run_len >= 4:
                break
            run_start += 1
        # literals up to the run (or the end)
        lit_end = run_start if run_start < n else n
        j = i
        while j < lit_end:
            k = min(128, lit_end - j)
            out.append(k)
            out.extend(vals[j:j + k].tobytes())
            j += k
        if run_start < n:
            out.append(128 + run_len)
            out.append(int(vals[run_start]))
            i = run_start + run_len
        else:
            break
    return bytes(out)


def read_hdr(path) -> np.ndarray:
    """Read a Radiance .hdr file into float64 (H, W, 3) linear radiance."""
    return decode_hdr(_read_bytes(path))


def decode_hdr(raw: bytes) -> np.ndarray:
    if not raw.startswith(b"#?"):
        raise HeaderError("missing Radiance magic '#?'")
    pos = 0
    fmt_seen = None
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise HeaderError("unterminated Radiance header")
        line = raw[pos:nl]
        pos = nl + 1
        if line.startswith(b"FORMAT="):
            fmt_seen = line[len(b"FORMAT="):].strip()
        if line == b"":
            break
    if fmt_seen is None:
        raise HeaderError("Radiance header missing FORMAT line")
    if fmt_seen != b"32-bit_rle_rgbe":
        raise UnsupportedError(f"unsupported Radiance format {fmt_seen!r}")

    nl = raw.find(b"\n", pos)
    if nl < 0:
        raise HeaderError("missing Radiance resolution line")
    res = raw[pos:nl].split()
    pos = nl + 1
    if len(res) != 4 or res[0] != b"-Y" or res[2] != b"+X":
        raise UnsupportedError(f"unsupported orientation {b' '.join(res)!r}")
    try:
        h = int(res[1])
        w = int(res[3])
    except ValueError:
        raise HeaderError("malformed Radiance resolution") from None
    if h <= 0 or w <= 0 or h > MAX_DIM or w > MAX_DIM:
        raise HeaderError(f"unreasonable HDR dimensions {w}x{h}")

    out = np.empty((h, w, 4), dtype=np.uint8)
    for r in range(h):
        pos = _decode_hdr_scanline(raw, pos, out[r])
    return _rgbe_to_float(out)


def _decode_hdr_scanline(raw: bytes, pos: int, dest: np.ndarray) -> int:
    w = dest.shape[0]
    head = raw[pos:pos + 4]
    if len(head) < 4:
        raise PayloadError("HDR scanline truncated")
    if head[0] == 2 and head[1] == 2 and ((head[2] << 8) | head[3]) == w and w >= 8:
        pos += 4
        for ch in range(4):
            filled = 0
            while filled < w:
                if pos >= len(raw):
                    raise PayloadError("HDR RLE stream truncated")
                code = raw[pos]
                pos += 1
                if code > 128:  # run
                    run = code - 128
                    if filled + run > w:
                        raise PayloadError("HDR RLE run overflows scanline")
                    if pos >= len(raw):
                        raise PayloadError("HDR RLE run value missing")
                    dest[filled:filled + run, ch] = raw[pos]
                    pos += 1
                    filled += run
                else:  # literals
                    if code == 0:
                        raise PayloadError("zero-length HDR RLE literal block")
                    if filled + code > w:
                        raise PayloadError("HDR RLE literals overflow scanline")
                    chunk = raw[pos:pos + code]
                    if len(chunk) < code:
                        raise PayloadError("HDR RLE literal block truncated")
                    dest[filled:filled + code, ch] = np.frombuffer(chunk, dtype=np.uint8)
                    pos += code
                    filled += code
        return pos
    # flat scanline: w raw rgbe quads
    need = 4 * w
    chunk = raw[pos:pos + need]
    if len(chunk) < need:
        raise PayloadError("flat HDR scanline truncated")
    dest[:] = np.frombuffer(chunk, dtype=np.uint8).reshape(w, 4)
    return pos + need


# ---------------------------------------------------------------------------
# PNG subset: grayscale depth 1/8/16, RGB depth 8/16, no interlace
# ---------------------------------------------------------------------------

_PNG_SIG = b"\x89PNG\r\n\x1a\n"


def _png_chunk(tag: bytes, body: bytes) -> bytes:
    return (struct.pack(">I", len(body)) + tag + body
            + struct.pack(">I", zlib.crc32(tag + body)))


def write_png(path, img: np.ndarray) -> None:
    """Write an image as PNG.

    dtype picks the encoding: bool -> 1-bit grayscale, uint8 -> 8-bit,
    uint16 -> 16-bit; shape picks grayscale (H, W) or truecolor (H, W, 3).
    """
    img = np.asarray(img)
    if img.ndim == 2 and img.dtype == bool:
        depth, color = 1, 0
        rows = np.packbits(img, axis=1).tobytes()
        row_len = (img.shape[1] + 7) // 8
    elif img.dtype == np.uint8 and img.ndim in (2, 3):
        depth, color = 8, 0 if img.ndim == 2 else 2
        rows = img.tobytes()
        row_len = img.shape[1] * (1 if img.ndim == 2 else 3)
    elif img.dtype == np.uint16 and img.ndim in (2, 3):
        depth, color = 16, 0 if img.ndim == 2 else 2
        rows = img.astype(">u2").tobytes()
        row_len = img.shape[1] * 2 * (1 if img.ndim == 2 else 3)
    else:
        raise ValueError(f"unsupported PNG payload {img.dtype}/{img.shape}")
    if img.ndim == 3 and img.shape[2] != 3:
        raise ValueError(f"PNG truecolor needs 3 channels, got {img.shape}")

    h, w = img.shape[:2]
    ihdr = struct.pack(">IIBBBBB", w, h, depth, color, 0, 0, 0)
    # filter byte 0 before every row
    raster = bytearray()
    for r in range(h):
        raster.append(0)
        raster.extend(rows[r * row_len:(r + 1) * row_len])
    payload = zlib.compress(bytes(raster), 6)
    with open(path, "wb") as f:
        f.write(_PNG_SIG)
        f.write(_png_chunk(b"IHDR", ihdr))
        f.write(_png_chunk(b"IDAT", payload))
        f.write(_png_chunk(b"IEND", b""))


def read_png(path) -> np.ndarray:
    """Read a PNG from the supported subset; returns bool, uint8, or uint16."""
    return decode_png(_read_bytes(path))


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def decode_png(raw: bytes) -> np.ndarray:
    if not raw.startswith(_PNG_SIG):
        raise HeaderError("missing PNG signature")
    pos = len(_PNG_SIG)
    ihdr = None
    idat = bytearray()
    ended = False
    while pos < len(raw) and not ended:
        if pos + 8 > len(raw):
            raise PayloadError("truncated PNG chunk header")
        (length,) = struct.unpack(">I", raw[pos:pos + 4])
        tag = raw[pos + 4:pos + 8]
        if length > len(raw):
            raise PayloadError(f"PNG chunk {tag!r} length overruns file")
        body = raw[pos + 8:pos + 8 + length]
        if len(body) < length:
            raise PayloadError(f"PNG chunk {tag!r} truncated")
        crc_bytes = raw[pos + 8 + length:pos + 12 + length]
        if len(crc_bytes) < 4:
            raise PayloadError(f"PNG chunk {tag!r} missing CRC")
        (crc,) = struct.unpack(">I", crc_bytes)
        if crc != zlib.crc32(tag + body):
            raise ChecksumError(f"PNG chunk {tag!r} CRC mismatch")
        pos += 12 + length
        if tag == b"IHDR":
            if ihdr is not None:
                raise HeaderError("duplicate IHDR")
            if length != 13:
                raise HeaderError(f"IHDR length {length} != 13")
            ihdr = struct.unpack(">IIBBBBB", body)
        elif tag == b"IDAT":
            if ihdr is None:
                raise HeaderError("IDAT before IHDR")
            idat.extend(body)
        elif tag == b"IEND":
            ended = True
    if ihdr is None:
        raise HeaderError("missing IHDR")
    if not ended:
        raise PayloadError("missing IEND")
    w, h, depth, color, comp, filt, interlace = ihdr
    if w <= 0 or h <= 0 or w > MAX_DIM or h > MAX_DIM:
        raise HeaderError(f"unreasonable PNG dimensions {w}x{h}")
    if comp != 0 or filt != 0:
        raise UnsupportedError("nonstandard PNG compression/filter method")
    if interlace != 0:
        raise UnsupportedError("interlaced PNG not supported")
    if (depth, color) not in ((1, 0), (8, 0), (16, 0), (8, 2), (16, 2)):
        raise UnsupportedError(f"unsupported PNG depth/color {depth}/{color}")

    channels = 3 if color == 2 else 1
    row_bytes = (w * depth * channels + 7) // 8
    bpp = max(1, depth * channels // 8)
    try:
        plain = zlib.decompress(bytes(idat))
    except zlib.error as e:
        raise PayloadError(f"PNG deflate stream corrupt: {e}") from None
    if len(plain) != h * (row_bytes + 1):
        raise PayloadError(
            f"PNG raster has {len(plain)} bytes, expected {h * (row_bytes + 1)}")

    out = np.zeros((h, row_bytes), dtype=np.uint8)
    prev = np.zeros(row_bytes, dtype=np.int64)
    for r in range(h):
        ftype = plain[r * (row_bytes + 1)]
        row = np.frombuffer(
            plain[r * (row_bytes + 1) + 1:(r + 1) * (row_bytes + 1)],
            dtype=np.uint8).astype(np.int64)
        if ftype == 0:
            cur = row
        elif ftype == 1:
            cur = row.copy()
            for i in range(bpp, row_bytes):
                cur[i] = (cur[i] + cur[i - bpp]) & 0xFF
        elif ftype == 2:
            cur = (row + prev) & 0xFF
        elif ftype == 3:
            cur = row.copy()
            for i in range(row_bytes):
                left = cur[i - bpp] if i >= bpp else 0
                cur[i] = (cur[i] + (left + prev[i]) // 2) & 0xFF
        elif ftype == 4:
            cur = row.copy()
            for i in range(row_bytes):
                left = cur[i - bpp] if i >= bpp else 0
                ul = prev[i - bpp] if i >= bpp else 0
                cur[i] = (cur[i] + _paeth(int(left), int(prev[i]), int(ul))) & 0xFF
        else:
            raise PayloadError(f"unknown PNG filter type {ftype}")
        out[r] = cur.astype(np.uint8)
        prev = cur

    if depth == 1:
        bits = np.unpackbits(out, axis=1)[:, :w]
        return bits.astype(bool)
    if depth == 8:
        arr = out[:, :w * channels]
        return arr.reshape(h, w) if channels == 1 else arr.reshape(h, w, 3)
    arr = np.frombuffer(out.tobytes(), dtype=">u2").reshape(h, w * channels)
    arr = arr.astype(np.uint16)
    return arr.reshape(h, w) if channels == 1 else arr.reshape(h, w, 3)
