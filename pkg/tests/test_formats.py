"""Codec round trips, error taxonomy, and decoder robustness fuzzing."""

import struct
import zlib

import numpy as np
import pytest

from relightkit.formats import (
    ChecksumError,
    FormatError,
    HeaderError,
    PayloadError,
    UnsupportedError,
    decode_hdr,
    decode_pfm,
    decode_png,
    read_hdr,
    read_pfm,
    read_png,
    write_hdr,
    write_pfm,
    write_png,
)

_PNG_SIG = b"\x89PNG\r\n\x1a\n"


def png_chunk(tag: bytes, body: bytes) -> bytes:
    return (struct.pack(">I", len(body)) + tag + body
            + struct.pack(">I", zlib.crc32(tag + body)))


def parse_png_chunks(raw: bytes):
    """[(tag, body), ...] for a well-formed PNG byte string."""
    chunks = []
    pos = len(_PNG_SIG)
    while pos < len(raw):
        (length,) = struct.unpack(">I", raw[pos:pos + 4])
        tag = raw[pos + 4:pos + 8]
        body = raw[pos + 8:pos + 8 + length]
        chunks.append((tag, body))
        pos += 12 + length
    return chunks


def rebuild_png(chunks) -> bytes:
    return _PNG_SIG + b"".join(png_chunk(tag, body) for tag, body in chunks)


class TestPfm:
    def test_rgb_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(40)
        img = (rng.standard_normal((7, 5, 3)) * 100).astype(np.float32)
        img[0, 0] = (0.0, -0.0, np.float32(1e-40))  # zeros and a denormal
        p = tmp_path / "x.pfm"
        write_pfm(p, img)
        back = read_pfm(p)
        assert back.dtype == np.float32
        np.testing.assert_array_equal(
            back.view(np.uint32), img.view(np.uint32))

    def test_gray_round_trip(self, tmp_path):
        rng = np.random.default_rng(41)
        img = rng.random((4, 9)).astype(np.float32)
        p = tmp_path / "g.pfm"
        write_pfm(p, img)
        back = read_pfm(p)
        assert back.shape == (4, 9)
        np.testing.assert_array_equal(back, img)

    def test_float64_input_stored_as_float32(self, tmp_path):
        img = np.array([[0.1, 0.2], [0.3, 0.4]])
        p = tmp_path / "d.pfm"
        write_pfm(p, img)
        np.testing.assert_array_equal(read_pfm(p), img.astype(np.float32))

    def test_big_endian_scale(self):
        vals = np.array([[1.5, -2.0, 3.25, 0.5, 8.0, -0.125]],
                        dtype=np.float32).reshape(1, 2, 3)
        raw = b"PF\n2 1\n1.0\n" + vals[::-1].astype(">f4").tobytes()
        np.testing.assert_array_equal(decode_pfm(raw), vals)

    def test_header_errors(self):
        with pytest.raises(HeaderError):
            decode_pfm(b"P6\n2 2\n-1.0\n" + b"\x00" * 48)
        with pytest.raises(HeaderError):
            decode_pfm(b"PF\n2")  # truncated header
        with pytest.raises(HeaderError):
            decode_pfm(b"PF\n0 2\n-1.0\n")
        with pytest.raises(HeaderError):
            decode_pfm(b"PF\n2 two\n-1.0\n" + b"\x00" * 48)
        with pytest.raises(HeaderError):
            decode_pfm(b"PF\n2 2\n0.0\n" + b"\x00" * 48)
        with pytest.raises(HeaderError):
            decode_pfm(b"PF\n99999999 2\n-1.0\n")

    def test_payload_errors(self):
        with pytest.raises(PayloadError):
            decode_pfm(b"PF\n2 2\n-1.0\n" + b"\x00" * 40)  # short raster
        with pytest.raises(PayloadError):
            decode_pfm(b"PF\n2 2\n-1.0")  # no raster at all

    def test_write_validation(self, tmp_path):
        with pytest.raises(ValueError):
            write_pfm(tmp_path / "bad.pfm", np.zeros((2, 2, 4)))
        with pytest.raises(ValueError):
            write_pfm(tmp_path / "bad.pfm", np.array([[np.inf]]))


class TestHdr:
    def test_round_trip_within_shared_exponent_precision(self, tmp_path):
        rng = np.random.default_rng(42)
        img = rng.random((16, 32, 3)) ** 2 * 50.0
        p = tmp_path / "e.hdr"
        write_hdr(p, img)
        back = read_hdr(p)
        assert back.shape == img.shape
        peak = img.max(axis=-1, keepdims=True)
        err = np.abs(back - img) / np.maximum(peak, 1e-30)
        assert err.max() <= 0.01

    def test_zeros_exact(self, tmp_path):
        p = tmp_path / "z.hdr"
        write_hdr(p, np.zeros((8, 8, 3)))
        np.testing.assert_array_equal(read_hdr(p), 0.0)

    def test_narrow_image_uses_flat_scanlines(self, tmp_path):
        rng = np.random.default_rng(43)
        img = rng.random((5, 4, 3)) * 10.0
        p = tmp_path / "n.hdr"
        write_hdr(p, img)
        raw = p.read_bytes()
        body = raw[raw.index(b"+X 4\n") + 5:]
        assert len(body) == 5 * 4 * 4  # h * w raw rgbe quads
        err = np.abs(read_hdr(p) - img) / np.maximum(img.max(axis=-1,
                                                             keepdims=True), 1e-30)
        assert err.max() <= 0.01

    def test_rle_compresses_flat_rows(self, tmp_path):
        img = np.full((4, 64, 3), 2.5)
        p = tmp_path / "flat.hdr"
        write_hdr(p, img)
        raw = p.read_bytes()
        assert len(raw) < 4 * 64 * 4  # far below the uncompressed raster
        np.testing.assert_allclose(read_hdr(p), 2.5, rtol=0.01)

    def test_long_runs_split_at_127(self, tmp_path):
        img = np.full((1, 1000, 3), 1.0)
        p = tmp_path / "long.hdr"
        write_hdr(p, img)
        np.testing.assert_allclose(read_hdr(p), 1.0, rtol=0.01)

    def test_header_errors(self):
        with pytest.raises(HeaderError):
            decode_hdr(b"not radiance")
        with pytest.raises(HeaderError):
            decode_hdr(b"#?RADIANCE\n\n-Y 2 +X 2\n")  # no FORMAT line
        with pytest.raises(HeaderError):
            decode_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n")  # unterminated
        with pytest.raises(HeaderError):
            decode_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 999999999 +X 2\n")

    def test_unsupported_variants(self):
        with pytest.raises(UnsupportedError):
            decode_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 2 +X 2\n"
                       + b"\x00" * 16)
        with pytest.raises(UnsupportedError):
            decode_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n+Y 2 +X 2\n"
                       + b"\x00" * 16)

    def test_payload_errors(self, tmp_path):
        with pytest.raises(PayloadError):
            decode_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 2 +X 2\n"
                       + b"\x00" * 7)  # half a flat scanline
        rng = np.random.default_rng(44)
        p = tmp_path / "t.hdr"
        write_hdr(p, rng.random((4, 16, 3)))
        raw = p.read_bytes()
        with pytest.raises(PayloadError):
            decode_hdr(raw[:-3])

    def test_write_validation(self, tmp_path):
        with pytest.raises(ValueError):
            write_hdr(tmp_path / "bad.hdr", np.zeros((2, 2)))
        with pytest.raises(ValueError):
            write_hdr(tmp_path / "bad.hdr", np.full((2, 2, 3), -1.0))


class TestPng:
    @pytest.mark.parametrize("shape,dtype", [
        ((5, 11), bool),
        ((6, 7), np.uint8),
        ((6, 7), np.uint16),
        ((4, 5, 3), np.uint8),
        ((4, 5, 3), np.uint16),
    ])
    def test_round_trips(self, tmp_path, shape, dtype):
        rng = np.random.default_rng(45)
        if dtype is bool:
            img = rng.random(shape) > 0.5
        else:
            info = np.iinfo(dtype)
            img = rng.integers(0, info.max + 1, shape).astype(dtype)
        p = tmp_path / "r.png"
        write_png(p, img)
        back = read_png(p)
        assert back.dtype == img.dtype
        np.testing.assert_array_equal(back, img)

    def test_filters_1_to_4_decode(self):
        # hand-encode a raster with each nontrivial filter to exercise the
        # reconstruction paths our writer never emits
        rng = np.random.default_rng(46)
        img = rng.integers(0, 256, (4, 5, 3)).astype(np.uint8)
        h, w = 4, 5
        bpp = 3

        def paeth(a, b, c):
            p = a + b - c
            pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
            if pa <= pb and pa <= pc:
                return a
            if pb <= pc:
                return b
            return c

        rows = img.reshape(h, w * bpp).astype(np.int64)
        raster = bytearray()
        prev = np.zeros(w * bpp, dtype=np.int64)
        for r, ftype in zip(range(h), (1, 2, 3, 4)):
            cur = rows[r]
            filt = np.zeros(w * bpp, dtype=np.int64)
            for i in range(w * bpp):
                left = cur[i - bpp] if i >= bpp else 0
                up = prev[i]
                ul = prev[i - bpp] if i >= bpp else 0
                if ftype == 1:
                    pred = left
                elif ftype == 2:
                    pred = up
                elif ftype == 3:
                    pred = (left + up) // 2
                else:
                    pred = paeth(int(left), int(up), int(ul))
                filt[i] = (cur[i] - pred) & 0xFF
            raster.append(ftype)
            raster.extend(filt.astype(np.uint8).tobytes())
            prev = cur
        ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
        raw = rebuild_png([(b"IHDR", ihdr),
                           (b"IDAT", zlib.compress(bytes(raster))),
                           (b"IEND", b"")])
        np.testing.assert_array_equal(decode_png(raw), img)

    def test_crc_corruption_detected(self, tmp_path):
        p = tmp_path / "c.png"
        write_png(p, np.arange(16, dtype=np.uint8).reshape(4, 4))
        raw = bytearray(p.read_bytes())
        raw[-5] ^= 0xFF  # inside IEND's CRC
        with pytest.raises(ChecksumError):
            decode_png(bytes(raw))

    def test_signature_required(self):
        with pytest.raises(HeaderError):
            decode_png(b"JFIF" + b"\x00" * 100)

    def make_valid(self, tmp_path):
        p = tmp_path / "v.png"
        write_png(p, np.arange(16, dtype=np.uint8).reshape(4, 4))
        return p.read_bytes()

    def test_interlace_unsupported(self, tmp_path):
        chunks = parse_png_chunks(self.make_valid(tmp_path))
        ihdr = bytearray(chunks[0][1])
        ihdr[12] = 1  # Adam7
        chunks[0] = (b"IHDR", bytes(ihdr))
        with pytest.raises(UnsupportedError):
            decode_png(rebuild_png(chunks))

    def test_exotic_depth_unsupported(self, tmp_path):
        chunks = parse_png_chunks(self.make_valid(tmp_path))
        ihdr = bytearray(chunks[0][1])
        ihdr[8] = 4  # depth 4
        chunks[0] = (b"IHDR", bytes(ihdr))
        with pytest.raises(UnsupportedError):
            decode_png(rebuild_png(chunks))

    def test_palette_color_unsupported(self, tmp_path):
        chunks = parse_png_chunks(self.make_valid(tmp_path))
        ihdr = bytearray(chunks[0][1])
        ihdr[9] = 3  # indexed
        chunks[0] = (b"IHDR", bytes(ihdr))
        with pytest.raises(UnsupportedError):
            decode_png(rebuild_png(chunks))

    def test_absurd_dimensions_rejected(self, tmp_path):
        chunks = parse_png_chunks(self.make_valid(tmp_path))
        ihdr = struct.pack(">IIBBBBB", 1 << 20, 4, 8, 0, 0, 0, 0)
        chunks[0] = (b"IHDR", ihdr)
        with pytest.raises(HeaderError):
            decode_png(rebuild_png(chunks))

    def test_corrupt_deflate_stream(self, tmp_path):
        chunks = parse_png_chunks(self.make_valid(tmp_path))
        out = []
        for tag, body in chunks:
            if tag == b"IDAT":
                body = b"\x00garbage\xff" * 3
            out.append((tag, body))
        with pytest.raises(PayloadError):
            decode_png(rebuild_png(out))

    def test_wrong_raster_length(self, tmp_path):
        chunks = parse_png_chunks(self.make_valid(tmp_path))
        out = []
        for tag, body in chunks:
            if tag == b"IDAT":
                body = zlib.compress(b"\x00" * 7)  # not h * (row_bytes + 1)
            out.append((tag, body))
        with pytest.raises(PayloadError):
            decode_png(rebuild_png(out))

    def test_unknown_filter_type(self, tmp_path):
        chunks = parse_png_chunks(self.make_valid(tmp_path))
        out = []
        for tag, body in chunks:
            if tag == b"IDAT":
                plain = bytearray(zlib.decompress(body))
                plain[0] = 9
                body = zlib.compress(bytes(plain))
            out.append((tag, body))
        with pytest.raises(PayloadError):
            decode_png(rebuild_png(out))

    def test_structural_errors(self, tmp_path):
        raw = self.make_valid(tmp_path)
        chunks = parse_png_chunks(raw)
        with pytest.raises(HeaderError):
            decode_png(rebuild_png([chunks[1], chunks[0], chunks[2]]))  # IDAT first
        with pytest.raises(PayloadError):
            decode_png(rebuild_png(chunks[:2]))  # missing IEND
        with pytest.raises(HeaderError):
            decode_png(rebuild_png([chunks[0]] + chunks))  # duplicate IHDR

    def test_write_validation(self, tmp_path):
        with pytest.raises(ValueError):
            write_png(tmp_path / "bad.png", np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            write_png(tmp_path / "bad.png", np.zeros((2, 2, 4), dtype=np.uint8))


class TestFuzz:
    """Decoders must reject garbage with FormatError -- never anything else."""

    def decode_all(self, raw: bytes) -> None:
        for decoder in (decode_pfm, decode_hdr, decode_png):
            try:
                decoder(raw)
            except FormatError:
                pass

    def test_random_bytes(self):
        rng = np.random.default_rng(47)
        for _ in range(200):
            n = int(rng.integers(0, 400))
            self.decode_all(rng.integers(0, 256, n).astype(np.uint8).tobytes())

    def test_random_bytes_with_real_magics(self):
        rng = np.random.default_rng(48)
        for magic in (b"PF\n", b"Pf\n", b"#?RADIANCE\n", _PNG_SIG):
            for _ in range(100):
                n = int(rng.integers(0, 300))
                tail = rng.integers(0, 256, n).astype(np.uint8).tobytes()
                self.decode_all(magic + tail)

    def valid_files(self, tmp_path):
        rng = np.random.default_rng(49)
        pfm = tmp_path / "f.pfm"
        hdr = tmp_path / "f.hdr"
        png = tmp_path / "f.png"
        write_pfm(pfm, rng.random((6, 8, 3)).astype(np.float32))
        write_hdr(hdr, rng.random((6, 16, 3)) * 4.0)
        write_png(png, rng.integers(0, 65536, (6, 8, 3)).astype(np.uint16))
        return [p.read_bytes() for p in (pfm, hdr, png)]

    def test_truncations_of_valid_files(self, tmp_path):
        for raw in self.valid_files(tmp_path):
            cuts = set(range(0, len(raw), max(1, len(raw) // 64)))
            cuts.update((1, 2, 3, len(raw) - 1))
            for k in sorted(cuts):
                self.decode_all(raw[:k])

    def test_bit_flips_of_valid_files(self, tmp_path):
        rng = np.random.default_rng(50)
        for raw in self.valid_files(tmp_path):
            for _ in range(150):
                buf = bytearray(raw)
                i = int(rng.integers(0, len(buf)))
                buf[i] ^= 1 << int(rng.integers(0, 8))
                self.decode_all(bytes(buf))

    def test_byte_insertions_and_deletions(self, tmp_path):
        rng = np.random.default_rng(51)
        for raw in self.valid_files(tmp_path):
            for _ in range(60):
                buf = bytearray(raw)
                i = int(rng.integers(0, len(buf)))
                if rng.integers(0, 2) == 0:
                    del buf[i]
                else:
                    buf.insert(i, int(rng.integers(0, 256)))
                self.decode_all(bytes(buf))
