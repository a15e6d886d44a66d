"""Image I/O, binarization and row overlay rendering.

Images are plain numpy arrays:

* gray image: ``uint8`` array of shape ``(height, width)``
* RGB image: ``uint8`` array of shape ``(height, width, 3)``
* binary mask: ``bool`` array of shape ``(height, width)``, True = crop-row pixel

PGM (P2/P5) and PPM (P6) are read and written by hand so the round trip is
bit-exact. PNG is decoded through Pillow.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np

WHITE = 255


class DecodeError(ValueError):
    """Raised when an image file cannot be decoded."""


def _check_2d(arr, name):
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")


def as_mask(arr) -> np.ndarray:
    arr = np.asarray(arr)
    _check_2d(arr, "mask")
    return arr.astype(bool, copy=False)


# ---------------------------------------------------------------------------
# decoding

def _netpbm_tokens(data: bytes, count: int, start: int = 2):
    """Read ``count`` whitespace-separated header tokens after the magic number.

    Returns the tokens and the offset just past the single whitespace byte that
    terminates the last token.
    """
    tokens = []
    pos = start
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        if pos >= n:
            raise DecodeError(f"truncated header at offset {pos}")
        begin = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos] != ord("#"):
            pos += 1
        tok = data[begin:pos]
        if not tok.isdigit():
            raise DecodeError(f"bad header token {tok!r} at offset {begin}")
        tokens.append(int(tok))
    if pos >= n or not data[pos : pos + 1].isspace():
        raise DecodeError(f"missing whitespace after header at offset {pos}")
    return tokens, pos + 1


def _decode_netpbm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P5", b"P6"):
        raise DecodeError(f"unsupported netpbm magic {magic!r} at offset 0")
    (width, height, maxval), pos = _netpbm_tokens(data, 3)
    if width < 1 or height < 1:
        raise DecodeError(f"invalid dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise DecodeError(f"unsupported maxval {maxval} (only 8-bit samples are supported)")
    channels = 3 if magic == b"P6" else 1
    count = width * height * channels

    if magic == b"P2":
        fields = data[pos:].split()
        if len(fields) < count:
            raise DecodeError(
                f"truncated ASCII payload: expected {count} samples, found {len(fields)}"
            )
        try:
            samples = np.array([int(f) for f in fields[:count]], dtype=np.int64)
        except ValueError as exc:
            raise DecodeError(f"non-numeric sample in ASCII payload: {exc}") from None
        if samples.min() < 0 or samples.max() > maxval:
            raise DecodeError(f"sample out of range 0..{maxval}")
    else:
        payload = data[pos : pos + count]
        if len(payload) < count:
            raise DecodeError(
                f"truncated payload at offset {pos + len(payload)}: "
                f"expected {count} bytes, got {len(payload)}"
            )
        samples = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
        if samples.max(initial=0) > maxval:
            raise DecodeError(f"sample exceeds maxval {maxval}")

    if maxval != 255:
        samples = (samples * 255 + maxval // 2) // maxval
    shape = (height, width, 3) if channels == 3 else (height, width)
    return samples.astype(np.uint8).reshape(shape)


def _decode_png(data: bytes) -> np.ndarray:
    from PIL import Image

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:  # Pillow raises a zoo of exception types
        raise DecodeError(f"invalid PNG: {exc}") from None
    if img.format != "PNG":
        raise DecodeError(f"not a PNG stream (found {img.format})")
    mode = img.mode
    if mode == "L":
        return np.array(img, dtype=np.uint8)
    if mode == "LA":
        return np.array(img.getchannel("L"), dtype=np.uint8)
    if mode in ("RGB", "RGBA", "P"):
        return np.array(img.convert("RGB"), dtype=np.uint8)
    raise DecodeError(f"unsupported PNG mode {mode!r} (need 8-bit gray or RGB)")


def decode_image(data: bytes, format: str | None = None) -> np.ndarray:
    """Decode PGM/PPM or PNG bytes into a gray ``(H, W)`` or RGB ``(H, W, 3)`` array.

    ``format`` may be ``"pgm"``, ``"ppm"`` or ``"png"``; when omitted it is
    sniffed from the magic bytes.
    """
    if format is None:
        format = "png" if data[:8] == b"\x89PNG\r\n\x1a\n" else "pgm"
    format = format.lower()
    if format in ("pgm", "ppm", "pnm"):
        return _decode_netpbm(data)
    if format == "png":
        return _decode_png(data)
    raise DecodeError(f"unknown image format {format!r}")


def read_image(path) -> np.ndarray:
    path = Path(path)
    fmt = path.suffix.lower().lstrip(".") or None
    if fmt not in ("pgm", "ppm", "pnm", "png"):
        fmt = None
    return decode_image(path.read_bytes(), fmt)


# ---------------------------------------------------------------------------
# encoding

def encode_gray(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    _check_2d(img, "gray image")
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + img.astype(np.uint8).tobytes()


def encode_mask(mask: np.ndarray) -> bytes:
    """Encode a mask as binary PGM, white=255 and black=0."""
    mask = as_mask(mask)
    return encode_gray(np.where(mask, WHITE, 0).astype(np.uint8))


def encode_rgb(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"RGB image must have shape (H, W, 3), got {img.shape}")
    h, w = img.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + img.astype(np.uint8).tobytes()


def write_image(path, img: np.ndarray) -> None:
    """Write a gray/RGB array or a mask; the format follows the file suffix."""
    path = Path(path)
    img = np.asarray(img)
    if img.dtype == bool:
        img = np.where(img, WHITE, 0).astype(np.uint8)
    suffix = path.suffix.lower()
    if suffix == ".png":
        from PIL import Image

        Image.fromarray(img.astype(np.uint8)).save(path, format="PNG")
    elif suffix in (".pgm", ".ppm", ".pnm"):
        data = encode_rgb(img) if img.ndim == 3 else encode_gray(img)
        path.write_bytes(data)
    else:
        raise ValueError(f"cannot infer image format from suffix {suffix!r}")


# ---------------------------------------------------------------------------
# binarization

def to_gray(img: np.ndarray) -> np.ndarray:
    """Collapse an RGB image to gray by taking the brightest channel.

    Masks stored as colour images (white rows on black) survive this exactly.
    """
    img = np.asarray(img)
    if img.ndim == 3:
        return img.max(axis=2)
    return img


def binarize(img: np.ndarray, threshold: int = 128) -> np.ndarray:
    """True where the sample is >= threshold (inclusive)."""
    if not 0 <= threshold <= 256:
        raise ValueError(f"threshold must be in 0..256, got {threshold}")
    return np.asarray(img) >= threshold


def read_mask(path, threshold: int = 128) -> np.ndarray:
    return binarize(to_gray(read_image(path)), threshold)


# ---------------------------------------------------------------------------
# overlay

def row_theta(angle: float) -> float:
    """Normal-form theta in [0, 180) for a row angle measured from vertical."""
    return angle % 180.0


def clip_line(rho: float, theta_deg: float, width: int, height: int):
    """Endpoints of the line x*cos(t) + y*sin(t) = rho clipped to the pixel grid.

    Returns ``((x0, y0), (x1, y1))`` in continuous coordinates or ``None`` when
    the line misses the image.
    """
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    # point on the line and its direction
    px, py = rho * c, rho * s
    dx, dy = -s, c
    lo, hi = -math.inf, math.inf
    for p, d, upper in ((px, dx, width - 1), (py, dy, height - 1)):
        if abs(d) < 1e-12:
            if p < -1e-9 or p > upper + 1e-9:
                return None
            continue
        a, b = (0 - p) / d, (upper - p) / d
        if a > b:
            a, b = b, a
        lo, hi = max(lo, a), min(hi, b)
    if lo > hi:
        return None
    return (px + lo * dx, py + lo * dy), (px + hi * dx, py + hi * dy)


def bresenham(x0: int, y0: int, x1: int, y1: int):
    """Integer points of the 8-connected digital segment between two pixels."""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    points = []
    while True:
        points.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return points
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def rasterize_row(rho: float, theta_deg: float, width: int, height: int):
    ends = clip_line(rho, theta_deg, width, height)
    if ends is None:
        return []
    (x0, y0), (x1, y1) = ends
    pts = bresenham(
        int(math.floor(x0 + 0.5)), int(math.floor(y0 + 0.5)),
        int(math.floor(x1 + 0.5)), int(math.floor(y1 + 0.5)),
    )
    return [(x, y) for x, y in pts if 0 <= x < width and 0 <= y < height]


def overlay_rows(img: np.ndarray, rows, color=(255, 0, 0)) -> np.ndarray:
    """Copy of ``img`` with every row drawn as a 1-px line in ``color``.

    ``rows`` are objects with ``angle`` (degrees from vertical) and ``rho``
    attributes, such as :class:`croprow.rowcluster.CropRow`. Gray images and
    masks are promoted to RGB.
    """
    img = np.asarray(img)
    if img.dtype == bool:
        img = np.where(img, WHITE, 0).astype(np.uint8)
    if img.ndim == 2:
        out = np.repeat(img[:, :, None], 3, axis=2).astype(np.uint8)
    else:
        out = img.astype(np.uint8, copy=True)
    h, w = out.shape[:2]
    for row in rows:
        pts = rasterize_row(row.rho, row_theta(row.angle), w, h)
        if pts:
            xs, ys = zip(*pts)
            out[list(ys), list(xs)] = color
    return out
