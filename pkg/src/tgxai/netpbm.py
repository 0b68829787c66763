"""Binary NetPBM readers and writers: PGM (P5), PBM (P4), PPM (P6).

These are the bit-exact interchange formats of the pipeline: grayscale
images as P5 (maxval 255 or 65535, 16-bit samples big-endian per the
format), binary masks as P4 (rows padded to whole bytes, MSB first,
1 = set), and color overlays as P6. write followed by read returns the
identical array.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError

_WHITESPACE = b" \t\r\n\x0b\x0c"


class _Scanner:
    """Tokenizer over a header: skips whitespace and # comments, keeps a byte offset."""

    def __init__(self, data: bytes, path=None):
        self.data = data
        self.pos = 0
        self.path = path

    def fail(self, message):
        raise ParseError(message, path=self.path, offset=self.pos)

    def _skip_separators(self):
        data = self.data
        while self.pos < len(data):
            c = data[self.pos : self.pos + 1]
            if c in (b"#",):
                nl = data.find(b"\n", self.pos)
                if nl < 0:
                    self.fail("unterminated comment in header")
                self.pos = nl + 1
            elif c in _WHITESPACE:
                self.pos += 1
            else:
                return

    def token(self) -> bytes:
        self._skip_separators()
        if self.pos >= len(self.data):
            self.fail("unexpected end of file in header")
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos : self.pos + 1] not in _WHITESPACE:
            if data[self.pos : self.pos + 1] == b"#":
                break
            self.pos += 1
        return data[start : self.pos]

    def integer(self, what: str) -> int:
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            self.pos -= len(tok)
            self.fail(f"expected integer for {what}, got {tok!r}")

    def raster(self, nbytes: int) -> bytes:
        # Exactly one whitespace byte separates the header from the raster.
        if self.pos >= len(self.data):
            self.fail("missing raster")
        if self.data[self.pos : self.pos + 1] not in _WHITESPACE:
            self.fail("header not terminated by whitespace")
        self.pos += 1
        raster = self.data[self.pos : self.pos + nbytes]
        if len(raster) < nbytes:
            self.pos = len(self.data)
            self.fail(f"truncated raster: expected {nbytes} bytes, found {len(raster)}")
        self.pos += nbytes
        return raster


def _read_header(scanner: _Scanner, magic: bytes):
    got = scanner.token()
    if got != magic:
        scanner.pos = 0
        scanner.fail(f"bad magic: expected {magic.decode()}, got {got!r}")
    width = scanner.integer("width")
    height = scanner.integer("height")
    if width < 1 or height < 1:
        scanner.fail(f"invalid dimensions {width}x{height}")
    return width, height


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM. Returns (H, W) uint8 for maxval 255, uint16 for 65535."""
    data = _read_bytes(path)
    s = _Scanner(data, path=path)
    width, height = _read_header(s, b"P5")
    maxval = s.integer("maxval")
    if maxval not in (255, 65535):
        s.fail(f"unsupported maxval {maxval} (expected 255 or 65535)")
    if maxval == 255:
        raster = s.raster(width * height)
        pixels = np.frombuffer(raster, dtype=np.uint8)
    else:
        raster = s.raster(2 * width * height)
        pixels = np.frombuffer(raster, dtype=">u2").astype(np.uint16)
    return pixels.reshape(height, width)


def write_pgm(path, image: np.ndarray) -> None:
    """Write a (H, W) uint8 or uint16 array as binary PGM."""
    if image.ndim != 2:
        raise ValueError(f"PGM image must be 2-D, got shape {image.shape}")
    height, width = image.shape
    if image.dtype == np.uint8:
        maxval, payload = 255, image.tobytes()
    elif image.dtype == np.uint16:
        maxval, payload = 65535, image.astype(">u2").tobytes()
    else:
        raise ValueError(f"PGM image must be uint8 or uint16, got {image.dtype}")
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (width, height, maxval))
        fh.write(payload)


def read_pbm(path) -> np.ndarray:
    """Read a binary PBM mask. Returns (H, W) bool; a 1 bit maps to True."""
    data = _read_bytes(path)
    s = _Scanner(data, path=path)
    width, height = _read_header(s, b"P4")
    row_bytes = (width + 7) // 8
    raster = s.raster(row_bytes * height)
    rows = np.frombuffer(raster, dtype=np.uint8).reshape(height, row_bytes)
    bits = np.unpackbits(rows, axis=1)[:, :width]
    return bits.astype(bool)


def write_pbm(path, mask: np.ndarray) -> None:
    """Write a (H, W) boolean mask as binary PBM, rows padded to whole bytes."""
    if mask.ndim != 2:
        raise ValueError(f"PBM mask must be 2-D, got shape {mask.shape}")
    if mask.dtype != bool:
        raise ValueError(f"PBM mask must be boolean, got {mask.dtype}")
    height, width = mask.shape
    packed = np.packbits(mask, axis=1)
    with open(path, "wb") as fh:
        fh.write(b"P4\n%d %d\n" % (width, height))
        fh.write(packed.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary 8-bit PPM. Returns (H, W, 3) uint8."""
    data = _read_bytes(path)
    s = _Scanner(data, path=path)
    width, height = _read_header(s, b"P6")
    maxval = s.integer("maxval")
    if maxval != 255:
        s.fail(f"unsupported maxval {maxval} (expected 255)")
    raster = s.raster(3 * width * height)
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(path, image: np.ndarray) -> None:
    """Write a (H, W, 3) uint8 array as binary PPM."""
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"PPM image must be (H, W, 3) uint8, got {image.shape} {image.dtype}")
    height, width = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (width, height))
        fh.write(image.tobytes())


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data:
        raise ParseError("empty file", path=path, offset=0)
    return data
