"""Sub-Riemannian geodesic tracking on SE(2) and the projective line bundle."""

from srtrack.geometry import (
    GroupElement,
    MetricParams,
    ProjectivePoint,
    Tangent,
    antipode,
    frame_at,
    group_inverse,
    group_product,
    metric_eval,
    project,
    sr_gradient,
)
from srtrack.fields import FieldKind, GridSpec, ScalarField3

__all__ = [
    "FieldKind",
    "GridSpec",
    "GroupElement",
    "MetricParams",
    "ProjectivePoint",
    "ScalarField3",
    "Tangent",
    "antipode",
    "frame_at",
    "group_inverse",
    "group_product",
    "metric_eval",
    "project",
    "sr_gradient",
]
