"""SE(2), its projective quotient, the left-invariant frame and the metric.

The group law is implemented exactly as

    (x, y, θ) ⊙ (x', y', θ') = (x' cos θ + y' sin θ + x,
                                -x' sin θ + y' cos θ + y,
                                θ + θ')

i.e. the translation part of the right factor is rotated by R(-θ). Every
other operation here (inverse, antipode) goes through :func:`group_product`
so the convention stays consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

from srtrack.errors import DomainError

if TYPE_CHECKING:
    from srtrack.fields import ScalarField3

TWO_PI = 2.0 * math.pi
WRAP_EPS = 1e-12


def wrap_angle(theta: float, period: float = TWO_PI) -> float:
    """Map an angle to ``[0, period)``; values within 1e-12 of ``period`` become 0."""
    t = math.fmod(theta, period)
    if t < 0.0:
        t += period
    if period - t <= WRAP_EPS:
        t = 0.0
    return t


@dataclass(frozen=True)
class GroupElement:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta), TWO_PI))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


@dataclass(frozen=True)
class ProjectivePoint:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta), math.pi))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)

    def lifts(self) -> tuple[GroupElement, GroupElement]:
        """The two SE(2) representatives (θ and θ + π)."""
        return (GroupElement(self.x, self.y, self.theta),
                GroupElement(self.x, self.y, self.theta + math.pi))


IDENTITY = GroupElement(0.0, 0.0, 0.0)
HALF_TURN = GroupElement(0.0, 0.0, math.pi)


@dataclass(frozen=True)
class Tangent:
    """Tangent vector given by its coefficients in the frame {A1, A2, A3}."""

    a1: float
    a2: float
    a3: float

    def to_cartesian(self, theta: float) -> tuple[float, float, float]:
        c, s = math.cos(theta), math.sin(theta)
        return (self.a1 * c - self.a3 * s, self.a1 * s + self.a3 * c, self.a2)

    @classmethod
    def from_cartesian(cls, theta: float, dx: float, dy: float, dtheta: float) -> "Tangent":
        c, s = math.cos(theta), math.sin(theta)
        return cls(dx * c + dy * s, dtheta, -dx * s + dy * c)


@dataclass(frozen=True)
class MetricParams:
    """Parameters of the (ε-relaxed) data-driven sub-Riemannian metric.

    ``cost`` is either a cost field or a positive constant (uniform cost).
    """

    xi: float
    eps: float = 0.1
    cost: Union["ScalarField3", float] = 1.0

    def __post_init__(self):
        if not self.xi > 0:
            raise DomainError(f"xi must be positive, got {self.xi}")
        if not self.eps >= 0:
            raise DomainError(f"eps must be non-negative, got {self.eps}")
        if isinstance(self.cost, (int, float)):
            if not self.cost > 0:
                raise DomainError(f"uniform cost must be positive, got {self.cost}")
        else:
            lo = float(np.min(self.cost.data))
            if not lo > 0 or lo < self.cost.c_min * (1 - 1e-12):
                raise DomainError(f"cost field has sample {lo} below its lower bound")

    def cost_at(self, q) -> float:
        if isinstance(self.cost, (int, float)):
            return float(self.cost)
        x, y, theta = _coords(q)
        return self.cost.sample((x, y, theta))


def _coords(q) -> tuple[float, float, float]:
    if isinstance(q, (GroupElement, ProjectivePoint)):
        return q.as_tuple()
    x, y, theta = q
    return float(x), float(y), float(theta)


def group_product(g: GroupElement, h: GroupElement) -> GroupElement:
    c, s = math.cos(g.theta), math.sin(g.theta)
    return GroupElement(h.x * c + h.y * s + g.x,
                        -h.x * s + h.y * c + g.y,
                        g.theta + h.theta)


def group_inverse(g: GroupElement) -> GroupElement:
    c, s = math.cos(g.theta), math.sin(g.theta)
    return GroupElement(-(c * g.x - s * g.y), -(s * g.x + c * g.y), -g.theta)


def antipode(g: GroupElement) -> GroupElement:
    return group_product(g, HALF_TURN)


def project(g: GroupElement) -> ProjectivePoint:
    return ProjectivePoint(g.x, g.y, g.theta)


def frame_at(g) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cartesian (∂x, ∂y, ∂θ) components of A1, A2, A3 at ``g``."""
    theta = _coords(g)[2]
    c, s = math.cos(theta), math.sin(theta)
    return (np.array([c, s, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([-s, c, 0.0]))


def metric_eval(p: MetricParams, q, v: Tangent) -> float:
    if p.eps == 0.0 and v.a3 != 0.0:
        raise DomainError("vector outside distribution Δ (a3 != 0 with eps = 0)")
    c2 = p.cost_at(q) ** 2
    val = p.xi**2 * v.a1**2 + v.a2**2
    if p.eps > 0.0:
        val += (p.xi * v.a3 / p.eps) ** 2
    return c2 * val


def sr_gradient(p: MetricParams, q, dW: tuple[float, float, float]) -> Tangent:
    """Raise the frame derivatives ``(A1 W, A2 W, A3 W)`` with the inverse metric."""
    a1w, a2w, a3w = dW
    c2 = p.cost_at(q) ** 2
    xi2 = p.xi**2
    return Tangent(a1w / (xi2 * c2), a2w / c2, p.eps**2 * a3w / (xi2 * c2))
