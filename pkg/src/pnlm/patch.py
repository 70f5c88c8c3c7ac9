"""Patch distances for every search offset, and the NLM weight kernel.

For an offset ``tau`` the squared difference plane ``(y_i - y_{i+tau})**2`` is
formed on the extended image and box-summed over the patch with a
summed-area table, so the cost per offset is independent of the patch radius.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .grid import as_image, extend

__all__ = [
    "NlmParams",
    "DistanceField",
    "MemoryBudgetError",
    "compute_distance_field",
    "naive_distance",
    "weight",
    "load_distance_field",
    "DEFAULT_CACHE_MB",
]

DEFAULT_CACHE_MB = 2048
_DUMP_MAGIC = b"PNLMDF01"


class MemoryBudgetError(MemoryError):
    """Caching all distance planes would exceed the configured budget."""


@dataclass(frozen=True)
class NlmParams:
    """Search radius ``S``, patch radius ``K``, smoothing ``h`` and noise ``sigma``.

    ``h`` defaults to ``10 * sigma``.
    """

    S: int = 10
    K: int = 3
    sigma: float = 0.0
    h: float | None = None

    def __post_init__(self):
        if self.S < 1:
            raise ValueError("search radius S must be >= 1")
        if self.K < 0:
            raise ValueError("patch radius K must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.h is None:
            object.__setattr__(self, "h", 10.0 * self.sigma)
        if not self.h > 0:
            raise ValueError("smoothing h must be > 0 (give h explicitly when sigma is 0)")

    @property
    def window(self) -> int:
        return 2 * self.S + 1

    @property
    def n_offsets(self) -> int:
        return self.window ** 2


def weight(d, h: float):
    """NLM weight ``exp(-d / h**2)`` of a squared patch distance."""
    if not h > 0:
        raise ValueError("h must be > 0")
    out = np.exp(-np.asarray(d, dtype=np.float64) / (h * h))
    return float(out) if out.ndim == 0 else out


def _block_rows(width: int) -> int:
    # rows per summed-area block: keeps one block of output cache lines resident
    return max(1, 8192 // width)


def _offsets(S: int) -> np.ndarray:
    r = np.arange(-S, S + 1)
    dr, dc = np.meshgrid(r, r, indexing="ij")
    return np.stack([dr.ravel(), dc.ravel()], axis=1)


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Squared patch distances ``d_tau(i)`` for all offsets ``tau`` in ``[-S, S]**2``.

    Stored pixel-major: ``planes[i, j, t]`` is the distance for pixel ``(i, j)``
    and offset ``offsets[t]`` (raster order), so one pixel's window is
    contiguous.  When not cached ``planes`` is None and bands of rows are
    recomputed on demand from the stored extended image.
    """

    shape: tuple[int, int]
    S: int
    K: int
    dtype: np.dtype
    padded: np.ndarray
    planes: np.ndarray | None
    band_rows: int

    @property
    def pad(self) -> int:
        return self.S + self.K

    @property
    def n_offsets(self) -> int:
        return (2 * self.S + 1) ** 2

    @property
    def cached(self) -> bool:
        return self.planes is not None

    @property
    def offsets(self) -> np.ndarray:
        return _offsets(self.S)

    @property
    def nbytes(self) -> int:
        return self.n_offsets * self.shape[0] * self.shape[1] * np.dtype(self.dtype).itemsize

    def source(self) -> np.ndarray:
        p = self.pad
        h, w = self.shape
        return self.padded[p:p + h, p:p + w]

    def band(self, r0: int, r1: int) -> np.ndarray:
        if self.planes is not None:
            return self.planes[r0:r1]
        out = np.empty((r1 - r0, self.shape[1], self.n_offsets), dtype=self.dtype)
        _kernels.distance_band(self.padded, self.pad, self.S, self.K, r0,
                               _block_rows(self.shape[1]), out)
        return out

    def bands(self, rows: int | None = None) -> Iterator[tuple[int, int, np.ndarray]]:
        rows = rows or self.band_rows
        h = self.shape[0]
        if self.planes is not None and rows >= h:
            yield 0, h, self.planes
            return
        for r0 in range(0, h, rows):
            r1 = min(h, r0 + rows)
            yield r0, r1, self.band(r0, r1)

    def plane(self, dr: int, dc: int) -> np.ndarray:
        if abs(dr) > self.S or abs(dc) > self.S:
            raise IndexError(f"offset ({dr}, {dc}) outside search window")
        t = (dr + self.S) * (2 * self.S + 1) + (dc + self.S)
        if self.planes is not None:
            return self.planes[:, :, t]
        return np.concatenate([b[:, :, t] for _, _, b in self.bands()], axis=0)

    def dump(self, path) -> None:
        """Debug dump: magic, H, W, S, K, itemsize (uint32 LE), then planes LE row-major."""
        itemsize = np.dtype(self.dtype).itemsize
        le = np.dtype(self.dtype).newbyteorder("<")
        h, w = self.shape
        header = _DUMP_MAGIC + struct.pack("<5I", h, w, self.S, self.K, itemsize)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.truncate(len(header) + self.nbytes)
            for r0, _, band in self.bands():
                for t in range(self.n_offsets):
                    fh.seek(len(header) + (t * h + r0) * w * itemsize)
                    fh.write(np.ascontiguousarray(band[:, :, t], dtype=le).tobytes())


def load_distance_field(path, img) -> DistanceField:
    """Read a debug dump back; ``img`` supplies the pixel values."""
    with open(path, "rb") as fh:
        if fh.read(8) != _DUMP_MAGIC:
            raise ValueError("not a distance-field dump")
        h, w, S, K, itemsize = struct.unpack("<5I", fh.read(20))
        dtype = {4: np.dtype("<f4"), 8: np.dtype("<f8")}[itemsize]
        planes = np.frombuffer(fh.read(), dtype=dtype).reshape((2 * S + 1) ** 2, h, w)
    img = as_image(img)
    if img.shape != (h, w):
        raise ValueError("image shape does not match dump")
    native = np.ascontiguousarray(planes.transpose(1, 2, 0), dtype=dtype.newbyteorder("="))
    return DistanceField((h, w), S, K, native.dtype, extend(img, S + K).data, native, h)


def compute_distance_field(img, params: NlmParams, precision="float32",
                           cache_mb: float = DEFAULT_CACHE_MB,
                           cache: bool | None = None) -> DistanceField:
    """Compute (or prepare to stream) all per-offset patch-distance planes.

    ``cache=None`` caches when ``(2S+1)**2 * H * W`` values fit in ``cache_mb``;
    ``cache=True`` raises :class:`MemoryBudgetError` if they do not;
    ``cache=False`` always streams.
    """
    img = as_image(img)
    dtype = np.dtype(precision)
    if dtype not in (np.float32, np.float64):
        raise ValueError("precision must be float32 or float64")
    S, K = params.S, params.K
    h, w = img.shape
    T = params.n_offsets
    budget = cache_mb * 2 ** 20
    row_bytes = T * w * dtype.itemsize
    need = row_bytes * h
    if cache is None:
        cache = need <= budget
    elif cache and need > budget:
        raise MemoryBudgetError(
            f"distance planes need {need / 2**20:.0f} MB, budget is {cache_mb} MB")
    # consumers hold up to three band-sized arrays (distances, weights, exps)
    band_rows = int(max(1, min(h, budget // (3 * row_bytes))))

    padded = np.ascontiguousarray(extend(img, S + K).data)
    planes = None
    if cache:
        planes = np.empty((h, w, T), dtype=dtype)
        _kernels.distance_band(padded, S + K, S, K, 0, _block_rows(w), planes)
    return DistanceField((h, w), S, K, dtype, padded, planes, band_rows)


def naive_distance(img, S: int, K: int) -> np.ndarray:
    """Direct double-loop reference, same ``[i, j, t]`` layout as the field."""
    img = as_image(img)
    yp = extend(img, S + K).data
    p = S + K
    h, w = img.shape
    out = np.zeros((h, w, (2 * S + 1) ** 2))
    for t, (dr, dc) in enumerate(_offsets(S)):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for ki in range(-K, K + 1):
                    for kj in range(-K, K + 1):
                        diff = yp[p + i + ki, p + j + kj] - yp[p + i + dr + ki, p + j + dc + kj]
                        acc += diff * diff
                out[i, j, t] = acc
    return out
