"""Grayscale image container helpers, boundary extension and file I/O.

Images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``.  Values
are nominally in [0, 255] but are never clamped in memory; quantization
happens only when writing a file.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ImageError",
    "PaddedImage",
    "as_image",
    "extend",
    "reflect_index",
    "load_image",
    "save_image",
    "quantize",
    "write_csv",
    "format_value",
]


class ImageError(ValueError):
    """Raised for unreadable, malformed or unsupported image data."""


def as_image(data) -> np.ndarray:
    """Validate ``data`` as a grayscale image and return it as float64."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise ImageError(f"expected a 2-D grayscale image, got shape {img.shape}")
    if img.size == 0:
        raise ImageError("zero-sized image")
    if not np.all(np.isfinite(img)):
        raise ImageError("image contains non-finite values")
    return img


@dataclass(frozen=True)
class PaddedImage:
    data: np.ndarray
    pad: int

    @property
    def source_shape(self) -> tuple[int, int]:
        h, w = self.data.shape
        return h - 2 * self.pad, w - 2 * self.pad

    def interior(self) -> np.ndarray:
        p = self.pad
        h, w = self.source_shape
        return self.data[p:p + h, p:p + w]


def reflect_index(n: int, pad: int) -> np.ndarray:
    """Source index for each position of a length-``n`` axis extended by ``pad``.

    Half-sample symmetric convention (edge sample repeated), applied
    iteratively when ``pad`` exceeds ``n``.
    """
    return np.pad(np.arange(n), pad, mode="symmetric")


def extend(img, pad: int) -> PaddedImage:
    """Extend ``img`` by ``pad`` pixels on every side: ``... c b a | a b c ...``."""
    if pad < 0:
        raise ValueError("pad must be non-negative")
    img = as_image(img)
    rows = reflect_index(img.shape[0], pad)
    cols = reflect_index(img.shape[1], pad)
    data = img[np.ix_(rows, cols)]
    data.setflags(write=False)
    return PaddedImage(data, pad)


# -- file formats -----------------------------------------------------------

def quantize(img) -> np.ndarray:
    """Round half-up and clamp to [0, 255] as uint8."""
    a = np.asarray(img, dtype=np.float64)
    return np.clip(np.floor(a + 0.5), 0, 255).astype(np.uint8)


def _read_pgm(raw: bytes) -> np.ndarray:
    # header tokens: magic, width, height, maxval; '#' comments allowed
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(raw):
            raise ImageError("truncated PGM header")
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise ImageError(f"unsupported PGM variant {tokens[0]!r} (only binary P5)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageError("malformed PGM header") from exc
    if maxval > 255:
        raise ImageError("unsupported bit depth")
    if maxval != 255:
        raise ImageError(f"unsupported maxval {maxval} (expected 255)")
    if width <= 0 or height <= 0:
        raise ImageError("zero-sized image")
    pos += 1  # single whitespace byte after maxval
    body = raw[pos:pos + width * height]
    if len(body) != width * height:
        raise ImageError("truncated PGM pixel data")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width).astype(np.float64)


def _read_png(path: str) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.format != "PNG":
            raise ImageError(f"{path}: not a PNG file")
        mode = im.mode
        if mode in ("I", "I;16", "I;16B", "I;16L") or im.info.get("bitdepth", 8) > 8:
            raise ImageError("unsupported bit depth")
        if mode == "P":
            im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            mode = im.mode
        if mode in ("1", "L"):
            return np.asarray(im.convert("L"), dtype=np.float64)
        if mode == "LA":
            return np.asarray(im, dtype=np.float64)[..., 0]
        if mode in ("RGB", "RGBA"):
            rgb = np.asarray(im, dtype=np.float64)[..., :3]
            # Rec.601 luma
            return rgb @ np.array([0.299, 0.587, 0.114])
        raise ImageError(f"unsupported PNG mode {mode}")


def load_image(path) -> np.ndarray:
    """Load an 8-bit P5 PGM or 8-bit gray/RGB PNG as float64 in [0, 255]."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
            fh.seek(0)
            if head.startswith(b"\x89PNG"):
                img = _read_png(path)
            elif head[:1] == b"P":
                img = _read_pgm(fh.read())
            else:
                raise ImageError(f"{path}: unrecognized image format")
    except OSError as exc:
        raise ImageError(f"{path}: {exc.strerror or exc}") from exc
    if img.size == 0:
        raise ImageError("zero-sized image")
    return img


def save_image(img, path) -> None:
    """Write ``img`` as P5 PGM (``.pgm``) or 8-bit gray PNG (``.png``)."""
    path = os.fspath(path)
    q = quantize(as_image(img))
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        from PIL import Image

        Image.fromarray(q, mode="L").save(path, format="PNG")
    elif ext in (".pgm", ""):
        h, w = q.shape
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write(q.tobytes())
    else:
        raise ImageError(f"unsupported output extension {ext!r}")


# -- tabular output ---------------------------------------------------------

def format_value(v) -> str:
    """CSV cell text: floats to 6 significant digits, '.' decimal separator."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if np.isposinf(v):
            return "inf"
        if np.isneginf(v):
            return "-inf"
        return f"{float(v):.6g}"
    return str(v)


def write_csv(path_or_file, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write an RFC-4180 CSV (CRLF line endings). Returns the text written."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    text = buf.getvalue()
    if path_or_file is None:
        return text
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", newline="") as fh:
            fh.write(text)
    return text
