"""Data-driven cost from a grayscale image.

Pipeline: orientation lift with an oriented second-derivative-of-Gaussian
filter bank, vesselness from a second derivative along A3 of the lifted
score, then C = 1 / (1 + λ V^p) floored at ``c_min``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from srtrack.errors import DomainError, PGMParseError
from srtrack.fields import FieldKind, GridSpec, ScalarField3


@dataclass(frozen=True)
class Image:
    pixels: np.ndarray  # (height, width), values in [0, 1]

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise DomainError("image must be a non-empty 2D array")
        if np.any(px < 0) or np.any(px > 1):
            raise DomainError("pixels must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def grid(self, ntheta: int, theta_period: float = math.pi) -> GridSpec:
        """Grid with one node per pixel: x is the column, y the row index."""
        return GridSpec(self.width, self.height, ntheta, 0.0, self.width - 1.0,
                        0.0, self.height - 1.0, theta_period)


@dataclass(frozen=True)
class CostParams:
    lam: float = 100.0
    p: float = 3.0
    ntheta: int = 32
    sigma_long: float = 3.0
    sigma_short: float = 1.0
    sigma_a3: float = 2.0
    c_min: float = 1e-3

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("lambda must be positive")
        if not self.p >= 1:
            raise DomainError("p must be >= 1")
        if self.ntheta < 4 or self.ntheta % 2:
            raise DomainError("ntheta must be an even integer >= 4")
        if not (self.sigma_long > 0 and self.sigma_short > 0 and self.sigma_a3 > 0):
            raise DomainError("filter scales must be positive")
        if not 0 < self.c_min <= 1.0 / (1.0 + self.lam):
            raise DomainError(f"c_min must lie in (0, 1/(1+lambda)], got {self.c_min}")


# -- PGM -------------------------------------------------------------------

_WS = b" \t\r\n\v\f"


def _header_tokens(buf: bytes, count: int) -> tuple[list[tuple[int, int]], int]:
    """Read ``count`` integer header tokens, skipping whitespace and comments."""
    pos = 2
    out = []
    while len(out) < count:
        while pos < len(buf) and (buf[pos] in _WS or buf[pos] == ord("#")):
            if buf[pos] == ord("#"):
                while pos < len(buf) and buf[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        m = re.compile(rb"\d+").match(buf, pos)
        if m is None:
            raise PGMParseError("expected an integer in the PGM header", pos)
        out.append((int(m.group()), pos))
        pos = m.end()
    return out, pos


def load_pgm(buf: bytes) -> Image:
    """Parse a P2 (ASCII) or P5 (binary, 8 or 16 bit) PGM stream."""
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMParseError(f"bad magic {magic!r}, expected b'P2' or b'P5'", 0)
    ((w, _), (h, _), (maxval, mpos)), pos = _header_tokens(buf, 3)
    if w <= 0 or h <= 0:
        raise PGMParseError("image dimensions must be positive", 2)
    if maxval <= 0 or maxval > 65535:
        raise PGMParseError(f"maxval must be in 1..65535, got {maxval}", mpos)
    n = w * h
    if magic == b"P5":
        if pos >= len(buf) or buf[pos] not in _WS:
            raise PGMParseError("missing whitespace before raster", pos)
        pos += 1
        bpp = 1 if maxval < 256 else 2
        need = n * bpp
        have = len(buf) - pos
        if have < need:
            raise PGMParseError(f"truncated raster: missing {need - have} bytes", len(buf))
        dtype = np.uint8 if bpp == 1 else np.dtype(">u2")
        vals = np.frombuffer(buf, dtype=dtype, count=n, offset=pos).astype(np.float64)
    else:
        toks = list(re.finditer(rb"\d+|[^\d\s]\S*", buf[pos:]))
        bad = next((t for t in toks[:n] if not t.group().isdigit()), None)
        if bad is not None:
            raise PGMParseError("non-numeric raster token", pos + bad.start())
        if len(toks) < n:
            raise PGMParseError(f"truncated raster: missing {n - len(toks)} samples", len(buf))
        vals = np.array([int(t.group()) for t in toks[:n]], dtype=np.float64)
    if np.any(vals > maxval):
        raise PGMParseError("sample exceeds maxval", pos)
    return Image((vals / maxval).reshape(h, w))


def save_pgm(img: Image, maxval: int = 255, binary: bool = True) -> bytes:
    q = np.rint(img.pixels * maxval).astype(np.int64)
    head = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n{maxval}\n".encode()
    if binary:
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        return head + q.astype(dtype).tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in q)
    return head + rows.encode() + b"\n"


# -- lift, vesselness, cost ------------------------------------------------

def oriented_kernel(theta: float, sigma_long: float, sigma_short: float) -> np.ndarray:
    """Zero-mean second derivative across orientation ``theta`` of an anisotropic Gaussian.

    Rows index y, columns index x.
    """
    r = int(math.ceil(3 * max(sigma_long, sigma_short)))
    y, x = np.mgrid[-r:r + 1, -r:r + 1].astype(np.float64)
    c, s = math.cos(theta), math.sin(theta)
    u = x * c + y * s
    v = -x * s + y * c
    g = np.exp(-0.5 * (u / sigma_long) ** 2 - 0.5 * (v / sigma_short) ** 2)
    g /= g.sum()
    k = g * (v**2 / sigma_short**4 - 1.0 / sigma_short**2)
    return k - k.mean()


def orientation_lift(img: Image, prm: CostParams) -> ScalarField3:
    """π-periodic orientation score |I * ψ_θ| on ``prm.ntheta`` orientations."""
    r = int(math.ceil(3 * max(prm.sigma_long, prm.sigma_short)))
    if img.width <= 2 * r + 1 or img.height <= 2 * r + 1:
        raise DomainError("image too small for the filter support")
    spec = img.grid(prm.ntheta, math.pi)
    out = np.empty(spec.shape)
    for k, th in enumerate(spec.thetas):
        # convolve flips the kernel; the kernel is point-symmetric so this is a correlation
        out[k] = np.abs(ndimage.convolve(img.pixels, oriented_kernel(th, prm.sigma_long, prm.sigma_short),
                                         mode="reflect"))
    return ScalarField3(spec, out, FieldKind.SCORE)


def vesselness(score: ScalarField3, sigma_a3: float = 2.0) -> ScalarField3:
    """Rectified negative second derivative along A3, max-normalised to [0, 1]."""
    out = np.empty(score.spec.shape)
    for k, th in enumerate(score.spec.thetas):
        slab = score.data[k]
        # axis 0 is y, axis 1 is x
        dxx = ndimage.gaussian_filter(slab, sigma_a3, order=(0, 2), mode="reflect")
        dyy = ndimage.gaussian_filter(slab, sigma_a3, order=(2, 0), mode="reflect")
        dxy = ndimage.gaussian_filter(slab, sigma_a3, order=(1, 1), mode="reflect")
        c, s = math.cos(th), math.sin(th)
        d33 = s * s * dxx - 2 * s * c * dxy + c * c * dyy
        out[k] = np.maximum(-d33, 0.0)
    peak = out.max()
    if peak > 0:
        out /= peak
    return ScalarField3(score.spec, out, FieldKind.SCORE)


def cost_map(V: ScalarField3, prm: CostParams, c_min: float | None = None) -> ScalarField3:
    c_min = prm.c_min if c_min is None else c_min
    if not 0 < c_min <= 1.0 / (1.0 + prm.lam):
        raise DomainError(f"c_min must lie in (0, 1/(1+lambda)], got {c_min}")
    v = V.data
    if np.any(v < 0) or np.any(v > 1):
        raise DomainError("vesselness must lie in [0, 1]")
    C = np.maximum(1.0 / (1.0 + prm.lam * v**prm.p), c_min)
    return ScalarField3(V.spec, C, FieldKind.COST, c_min)


def image_to_cost(img: Image, prm: CostParams) -> ScalarField3:
    return cost_map(vesselness(orientation_lift(img, prm), prm.sigma_a3), prm)
