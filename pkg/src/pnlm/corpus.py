"""Test-image corpus: a manifest of ``name,path,sha256`` rows plus fetch helpers.

Two sources are supported.  ``skimage`` exports the grayscale sample images
bundled with scikit-image (no network needed).  ``urls`` downloads from a
user-supplied CSV with ``name,url[,sha256]`` columns; each file is converted to
8-bit gray (Rec.601 luma) and stored as PGM.  Checksums are verified when
given and recorded in the written manifest either way.
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
from pathlib import Path

import numpy as np

from .grid import load_image, save_image

__all__ = [
    "corpus_dir",
    "read_manifest",
    "load_corpus",
    "fetch_skimage",
    "fetch_urls",
    "half_size",
    "MANIFEST",
]

MANIFEST = "manifest.csv"
ENV_VAR = "PNLM_CORPUS_DIR"

# scikit-image samples that are natively grayscale or convert cleanly
_SKIMAGE_GRAY = ("camera", "moon", "coins", "brick", "grass", "gravel", "clock", "text", "page")
_SKIMAGE_RGB = ("astronaut", "coffee", "chelsea", "rocket")


def corpus_dir(path=None) -> Path:
    if path is not None:
        return Path(path)
    return Path(os.environ.get(ENV_VAR, "corpus"))


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_manifest(root=None) -> list[dict]:
    root = corpus_dir(root)
    with open(root / MANIFEST, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_manifest(root: Path, entries: list[dict]) -> None:
    with open(root / MANIFEST, "w", newline="") as fh:
        writer = csv.DictWriter(fh, ["name", "path", "sha256"], lineterminator="\r\n")
        writer.writeheader()
        writer.writerows(entries)


def load_corpus(root=None, names=None, verify: bool = True) -> list[tuple[str, np.ndarray]]:
    """Load manifest images, optionally filtered by ``names`` and checksum-verified."""
    root = corpus_dir(root)
    out = []
    for row in read_manifest(root):
        if names and row["name"] not in names:
            continue
        path = root / row["path"]
        if verify and row.get("sha256") and _sha256(path) != row["sha256"]:
            raise IOError(f"checksum mismatch for {path}")
        out.append((row["name"], load_image(path)))
    return out


def half_size(img) -> np.ndarray:
    """2x2 block average (drops a trailing odd row/column)."""
    h, w = img.shape
    a = img[: h // 2 * 2, : w // 2 * 2]
    return a.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def _gray(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        img = img[..., :3] @ np.array([0.299, 0.587, 0.114])
    return img


def fetch_skimage(dest=None, size: int | None = 256) -> list[dict]:
    """Export scikit-image sample images as 8-bit PGM (downsampled/cropped to ``size``)."""
    from skimage import data

    root = corpus_dir(dest)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in _SKIMAGE_GRAY + _SKIMAGE_RGB:
        img = _gray(getattr(data, name)())
        if size is not None:
            while min(img.shape) >= 2 * size:
                img = half_size(img)
            img = img[:size, :size]
        rel = f"{name}.pgm"
        save_image(img, root / rel)
        entries.append({"name": name, "path": rel, "sha256": _sha256(root / rel)})
    _write_manifest(root, entries)
    return entries


def fetch_urls(url_list, dest=None, timeout: float = 60.0) -> list[dict]:
    """Download ``name,url[,sha256]`` rows, convert to gray PGM and write the manifest."""
    import urllib.request

    from PIL import Image

    root = corpus_dir(dest)
    root.mkdir(parents=True, exist_ok=True)
    with open(url_list, newline="") as fh:
        rows = list(csv.DictReader(fh))
    entries = []
    for row in rows:
        with urllib.request.urlopen(row["url"], timeout=timeout) as resp:
            raw = resp.read()
        want = (row.get("sha256") or "").strip()
        if want and hashlib.sha256(raw).hexdigest() != want:
            raise IOError(f"checksum mismatch for {row['url']}")
        with Image.open(io.BytesIO(raw)) as im:
            if im.mode not in ("L", "RGB", "RGBA", "P"):
                raise IOError(f"{row['name']}: unsupported mode {im.mode}")
            img = _gray(np.asarray(im.convert("RGB") if im.mode != "L" else im))
        rel = f"{row['name']}.pgm"
        save_image(img, root / rel)
        entries.append({"name": row["name"], "path": rel, "sha256": _sha256(root / rel)})
    _write_manifest(root, entries)
    return entries
