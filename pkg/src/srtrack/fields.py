"""Sampled scalar fields on rectangular (x, y, θ) grids with periodic θ.

Arrays are stored with shape ``(ntheta, ny, nx)`` in C order, so x is the
fastest-varying index in memory.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from srtrack.errors import (
    DomainError,
    FieldFormatError,
    IncompatibleGridsError,
    NotProjectiveCompatibleError,
    OutOfDomainError,
)

SRF1_MAGIC = b"SRF1"
_HEADER = struct.Struct("<4sIIIB6d")
PROJECTIVE_TOL = 1e-9


class FieldKind(str, Enum):
    COST = "cost"
    VALUE = "value"
    SCORE = "score"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]


_KIND_CODES = {FieldKind.COST: 0, FieldKind.VALUE: 1, FieldKind.SCORE: 2}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    ntheta: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    theta_period: float = 2 * math.pi

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3 or self.ntheta < 4:
            raise DomainError(f"grid too small: nx={self.nx}, ny={self.ny}, ntheta={self.ntheta}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DomainError("empty spatial box")
        if not (math.isclose(self.theta_period, math.pi) or math.isclose(self.theta_period, 2 * math.pi)):
            raise DomainError(f"theta_period must be pi or 2pi, got {self.theta_period}")

    @classmethod
    def centered(cls, n: int, h: float, ntheta: int, theta_period: float = 2 * math.pi) -> "GridSpec":
        """Square grid of ``n`` nodes per axis with spacing ``h`` and a node at the origin."""
        lo = -(n // 2) * h
        hi = lo + (n - 1) * h
        return cls(n, n, ntheta, lo, hi, lo, hi, theta_period)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.ntheta, self.ny, self.nx)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def htheta(self) -> float:
        return self.theta_period / self.ntheta

    @property
    def h_max(self) -> float:
        return max(self.hx, self.hy, self.htheta)

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + self.hx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y_min + self.hy * np.arange(self.ny)

    @property
    def thetas(self) -> np.ndarray:
        return self.htheta * np.arange(self.ntheta)

    @property
    def is_projective(self) -> bool:
        return math.isclose(self.theta_period, math.pi)

    @property
    def diameter(self) -> float:
        return math.sqrt((self.x_max - self.x_min) ** 2 + (self.y_max - self.y_min) ** 2
                         + self.theta_period**2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate arrays of shape :attr:`shape`."""
        T, Y, X = np.meshgrid(self.thetas, self.ys, self.xs, indexing="ij")
        return X, Y, T

    def node_coords(self, k: int, j: int, i: int) -> tuple[float, float, float]:
        return (self.x_min + i * self.hx, self.y_min + j * self.hy, k * self.htheta)

    def nearest_node(self, q) -> tuple[int, int, int]:
        """Index ``(k, j, i)`` of the grid node nearest to ``q`` (θ taken modulo the period)."""
        x, y, theta = q
        if not self.contains(x, y):
            raise OutOfDomainError(f"point ({x}, {y}) outside the spatial box")
        i = int(round((x - self.x_min) / self.hx))
        j = int(round((y - self.y_min) / self.hy))
        k = int(round((theta % self.theta_period) / self.htheta)) % self.ntheta
        return (k, j, i)

    def contains(self, x: float, y: float, slack: float = 1e-9) -> bool:
        sx = slack * self.hx
        sy = slack * self.hy
        return (self.x_min - sx <= x <= self.x_max + sx) and (self.y_min - sy <= y <= self.y_max + sy)

    def with_period(self, theta_period: float, ntheta: int) -> "GridSpec":
        return GridSpec(self.nx, self.ny, ntheta, self.x_min, self.x_max,
                        self.y_min, self.y_max, theta_period)


@dataclass
class ScalarField3:
    spec: GridSpec
    data: np.ndarray
    kind: FieldKind = FieldKind.VALUE
    c_min: float = 0.0
    _frozen: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.kind = FieldKind(self.kind)
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.shape != self.spec.shape:
            raise DomainError(f"data shape {self.data.shape} does not match grid {self.spec.shape}")
        if self.kind is FieldKind.COST:
            if not self.c_min > 0:
                raise DomainError("cost field needs a positive lower bound c_min")
            if not np.all(self.data >= self.c_min * (1 - 1e-12)):
                raise DomainError(f"cost sample below c_min={self.c_min}")
        elif self.kind is FieldKind.VALUE:
            if np.any(np.isnan(self.data)) or np.any(self.data < 0):
                raise DomainError("value field must be >= 0 or +inf")
        if self._frozen:
            self.data.setflags(write=False)

    @classmethod
    def from_function(cls, spec: GridSpec, fn, kind=FieldKind.VALUE, c_min: float = 0.0) -> "ScalarField3":
        X, Y, T = spec.mesh()
        return cls(spec, np.broadcast_to(fn(X, Y, T), spec.shape).copy(), kind, c_min)

    @classmethod
    def constant(cls, spec: GridSpec, value: float, kind=FieldKind.COST) -> "ScalarField3":
        c_min = value if FieldKind(kind) is FieldKind.COST else 0.0
        return cls(spec, np.full(spec.shape, float(value)), kind, c_min)

    def sample(self, q) -> float:
        """Trilinear interpolation at ``q = (x, y, θ)`` with periodic θ."""
        x, y, theta = q
        if not self.spec.contains(x, y):
            raise OutOfDomainError(f"point ({x}, {y}) out of domain")
        return float(interp3(self.data, self.spec, np.array([x]), np.array([y]), np.array([theta]))[0])

    def at_node(self, k: int, j: int, i: int) -> float:
        return float(self.data[k, j, i])


def interp3(data: np.ndarray, spec: GridSpec, x, y, theta) -> np.ndarray:
    """Vectorized trilinear interpolation; spatial coordinates are clamped to the box."""
    fx = np.clip((np.asarray(x, float) - spec.x_min) / spec.hx, 0.0, spec.nx - 1)
    fy = np.clip((np.asarray(y, float) - spec.y_min) / spec.hy, 0.0, spec.ny - 1)
    ft = np.mod(np.asarray(theta, float), spec.theta_period) / spec.htheta
    i0 = np.minimum(np.floor(fx).astype(int), spec.nx - 2)
    j0 = np.minimum(np.floor(fy).astype(int), spec.ny - 2)
    k0 = np.floor(ft).astype(int) % spec.ntheta
    k1 = (k0 + 1) % spec.ntheta
    ax, ay = fx - i0, fy - j0
    at = ft - np.floor(ft)
    out = np.zeros(np.broadcast(fx, fy, ft).shape)
    for kk, wt in ((k0, 1 - at), (k1, at)):
        for jj, wy in ((j0, 1 - ay), (j0 + 1, ay)):
            for ii, wx in ((i0, 1 - ax), (i0 + 1, ax)):
                w = wt * wy * wx
                v = data[kk, jj, ii]
                # inf * 0 must not poison the result
                out = out + np.where(w > 0, w * np.where(w > 0, v, 0.0), 0.0)
    return out


def cartesian_derivatives(f: ScalarField3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """∂x f, ∂y f (second-order, one-sided at the box edges) and periodic ∂θ f."""
    s = f.spec
    d = f.data
    fx = np.gradient(d, s.hx, axis=2, edge_order=2)
    fy = np.gradient(d, s.hy, axis=1, edge_order=2)
    ft = (np.roll(d, -1, axis=0) - np.roll(d, 1, axis=0)) / (2 * s.htheta)
    return fx, fy, ft


def frame_derivative_fields(f: ScalarField3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A1 f, A2 f, A3 f at every node."""
    fx, fy, ft = cartesian_derivatives(f)
    th = f.spec.thetas[:, None, None]
    c, s = np.cos(th), np.sin(th)
    return c * fx + s * fy, ft, -s * fx + c * fy


def frame_derivatives(f: ScalarField3, node: tuple[int, int, int]) -> tuple[float, float, float]:
    """A1 f, A2 f, A3 f at one node ``(k, j, i)``."""
    k, j, i = node
    s = f.spec
    d = f.data
    theta = k * s.htheta

    def diff(axis_len, idx, get, h):
        if 0 < idx < axis_len - 1:
            return (get(idx + 1) - get(idx - 1)) / (2 * h)
        if idx == 0:
            return (-3 * get(0) + 4 * get(1) - get(2)) / (2 * h)
        n = axis_len - 1
        return (3 * get(n) - 4 * get(n - 1) + get(n - 2)) / (2 * h)

    fx = diff(s.nx, i, lambda m: d[k, j, m], s.hx)
    fy = diff(s.ny, j, lambda m: d[k, m, i], s.hy)
    ft = (d[(k + 1) % s.ntheta, j, i] - d[(k - 1) % s.ntheta, j, i]) / (2 * s.htheta)
    c, sn = math.cos(theta), math.sin(theta)
    return (c * fx + sn * fy, ft, -sn * fx + c * fy)


def pointwise_min(f: ScalarField3, g: ScalarField3) -> ScalarField3:
    if f.spec != g.spec:
        raise IncompatibleGridsError("incompatible grids")
    kind = f.kind if f.kind == g.kind else FieldKind.VALUE
    c_min = min(f.c_min, g.c_min) if kind is FieldKind.COST else 0.0
    return ScalarField3(f.spec, np.minimum(f.data, g.data), kind, c_min)


def fold_to_projective(f: ScalarField3) -> ScalarField3:
    """Quotient a 2π-periodic field to a π-periodic one.

    Value fields take the minimum over the two lifts; cost and score fields
    must already agree on antipodal slabs.
    """
    s = f.spec
    if s.is_projective:
        raise DomainError("field is already pi-periodic")
    if s.ntheta % 2:
        raise DomainError("ntheta must be even to fold")
    half = s.ntheta // 2
    a, b = f.data[:half], f.data[half:]
    if f.kind is FieldKind.VALUE:
        out = np.minimum(a, b)
    else:
        scale = max(1.0, float(np.max(np.abs(a[np.isfinite(a)]), initial=0.0)))
        if not np.allclose(a, b, rtol=0.0, atol=PROJECTIVE_TOL * scale):
            raise NotProjectiveCompatibleError("not projective-compatible: antipodal slabs differ")
        out = a.copy()
    return ScalarField3(s.with_period(math.pi, half), out, f.kind, f.c_min)


def unfold_to_se2(f: ScalarField3) -> ScalarField3:
    """Lift a π-periodic field to the 2π grid by duplicating slabs."""
    s = f.spec
    if not s.is_projective:
        raise DomainError("field is not pi-periodic")
    data = np.concatenate([f.data, f.data], axis=0)
    return ScalarField3(s.with_period(2 * math.pi, 2 * s.ntheta), data, f.kind, f.c_min)


def write_srf1(f: ScalarField3, path) -> None:
    s = f.spec
    header = _HEADER.pack(SRF1_MAGIC, s.nx, s.ny, s.ntheta, f.kind.code,
                          s.x_min, s.x_max, s.y_min, s.y_max, s.theta_period, f.c_min)
    payload = np.ascontiguousarray(f.data, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_srf1(path) -> ScalarField3:
    return parse_srf1(Path(path).read_bytes())


def parse_srf1(buf: bytes) -> ScalarField3:
    if len(buf) < _HEADER.size:
        raise FieldFormatError(f"truncated SRF1 header: {len(buf)} of {_HEADER.size} bytes")
    magic, nx, ny, nt, code, x0, x1, y0, y1, period, c_min = _HEADER.unpack_from(buf)
    if magic != SRF1_MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}, expected {SRF1_MAGIC!r}")
    if code not in _CODE_KINDS:
        raise FieldFormatError(f"unknown field kind code {code}")
    n = nx * ny * nt
    expected = _HEADER.size + 8 * n
    if len(buf) < expected:
        raise FieldFormatError(f"truncated SRF1 payload: {len(buf) - _HEADER.size} of {8 * n} bytes")
    if len(buf) > expected:
        raise FieldFormatError(f"trailing bytes after SRF1 payload: {len(buf) - expected}")
    data = np.frombuffer(buf, dtype="<f8", count=n, offset=_HEADER.size).reshape(nt, ny, nx)
    spec = GridSpec(nx, ny, nt, x0, x1, y0, y1, period)
    return ScalarField3(spec, data.astype(np.float64), _CODE_KINDS[code], c_min)
