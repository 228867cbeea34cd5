"""Deterministic synthetic vessel images (bright ridges on a dark background)."""

from __future__ import annotations

import math

import numpy as np

from srtrack.cost import Image
from srtrack.errors import DomainError

KINDS = ("line", "scurve", "crossing")


def _ridge(dist: np.ndarray, width: float) -> np.ndarray:
    return np.exp(-0.5 * (dist / width) ** 2)


def _coords(size: int):
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    c = (size - 1) / 2.0
    return x - c, y - c


def _line_distance(x, y, angle):
    return np.abs(-x * math.sin(angle) + y * math.cos(angle))


def scurve_points(size: int, amplitude: float = 0.25, n: int = 4001) -> np.ndarray:
    """Centreline samples of the S-shaped ridge, centred on the image.

    x runs over the middle 70% of the image; y = a·size·sin(π x / half_span)
    turns the ridge by a full period, so the curve is point-symmetric about the
    centre and its two ends have opposite turning.
    """
    half = 0.35 * (size - 1)
    s = np.linspace(0.0, 1.0, n // 2 + 1)
    right = np.stack([half * s, amplitude * size * np.sin(math.pi * s)], axis=1)
    # mirror exactly so the point symmetry holds bit for bit
    pts = np.concatenate([-right[:0:-1], right])
    return pts + (size - 1) / 2.0


def _polyline_distance(x, y, pts):
    from scipy.spatial import cKDTree
    c = (x.shape[0] - 1) / 2.0
    tree = cKDTree(pts - c)
    d, _ = tree.query(np.stack([x.ravel(), y.ravel()], axis=1))
    return d.reshape(x.shape)


def phantom(kind: str, size: int = 64, angle: float = 0.0, width: float = 1.5,
            amplitude: float = 0.25, crossing_angle: float = math.pi / 2) -> Image:
    """Synthetic vessel image.

    * ``line``: straight ridge through the centre at ``angle`` (0 = along rows);
    * ``scurve``: S-shaped ridge, invariant under a 180° rotation of the image;
    * ``crossing``: two straight ridges through the centre at ``angle`` and
      ``angle + crossing_angle``.
    """
    if size < 32:
        raise DomainError("phantom size must be >= 32")
    x, y = _coords(size)
    if kind == "line":
        img = _ridge(_line_distance(x, y, angle), width)
    elif kind == "scurve":
        d = _polyline_distance(x, y, scurve_points(size, amplitude))
        img = _ridge(d, width)
    elif kind == "crossing":
        a = _ridge(_line_distance(x, y, angle), width)
        b = _ridge(_line_distance(x, y, angle + crossing_angle), width)
        img = np.maximum(a, b)
    else:
        raise ValueError(f"unknown phantom kind {kind!r}; expected one of {KINDS}")
    return Image(np.clip(img, 0.0, 1.0))
