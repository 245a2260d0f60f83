"""Core 3D types and the piecewise-rigid motion model.

A part moves either by rotation about a line (revolute joint) or by
translation along a direction (prismatic joint).  All functions here are
pure: they never modify their inputs.

Angles are radians throughout the library.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyInputError, InvalidAxisError, ArticError

STATIC = 0
DYNAMIC = 1

UNIT_TOL = 1e-9


class MotionKind(str, Enum):
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"


def _as_points(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1 and pts.size == 3:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ArticError(f"points must have shape (N, 3), got {pts.shape}")
    return pts


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered set of 3D points with optional per-point part labels.

    Parameters
    ----------
    points : (N, 3) array_like
        Coordinates in model units. Must be finite, ``N >= 1``.
    labels : (N,) array_like of {0, 1}, optional
        ``STATIC`` (0) or ``DYNAMIC`` (1) per point.
    """

    points: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = _as_points(self.points)
        if len(pts) == 0:
            raise EmptyInputError("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ArticError("point coordinates must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (len(pts),):
                raise ArticError(
                    f"labels must have shape ({len(pts)},), got {lab.shape}"
                )
            if lab.size and not np.all((lab == STATIC) | (lab == DYNAMIC)):
                raise ArticError("labels must be 0 (static) or 1 (dynamic)")
            lab = lab.astype(np.uint8)
            lab.flags.writeable = False
            object.__setattr__(self, "labels", lab)

    def __len__(self):
        return len(self.points)

    def with_points(self, points):
        """Same labels, new coordinates."""
        return PointCloud(points, self.labels)

    def select(self, label):
        """Unlabeled sub-cloud of points carrying ``label``."""
        if self.labels is None:
            raise ArticError("cloud has no labels")
        return PointCloud(self.points[self.labels == label])

    @property
    def dynamic(self):
        return self.select(DYNAMIC)

    @property
    def static(self):
        return self.select(STATIC)

    @property
    def centroid(self):
        return self.points.mean(axis=0)

    @property
    def diagonal(self):
        """Length of the axis-aligned bounding box diagonal."""
        return float(np.linalg.norm(np.ptp(self.points, axis=0)))

    def equals(self, other):
        """Bitwise equality of coordinates and labels."""
        if not np.array_equal(self.points, other.points):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)


def check_unit(direction, name="direction"):
    d = np.asarray(direction, dtype=np.float64)
    if d.shape != (3,) or not np.all(np.isfinite(d)):
        raise InvalidAxisError(f"{name} must be a finite 3-vector")
    norm = np.linalg.norm(d)
    if abs(norm - 1.0) > UNIT_TOL:
        raise InvalidAxisError(f"{name} has norm {norm!r}, expected 1")
    return d


def normalize(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0:
        raise InvalidAxisError("cannot normalize a zero or non-finite vector")
    return v / n


@dataclass(frozen=True, eq=False)
class MotionAxis:
    """Motion type plus a unit direction and a point on the joint line.

    For prismatic joints the origin is a reporting convention only (the
    dynamic part centroid) and never affects the transform.
    """

    kind: MotionKind
    direction: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kind", MotionKind(self.kind))
        d = check_unit(self.direction)
        o = np.asarray(self.origin, dtype=np.float64)
        if o.shape != (3,) or not np.all(np.isfinite(o)):
            raise ArticError("origin must be a finite 3-vector")
        object.__setattr__(self, "direction", d.copy())
        object.__setattr__(self, "origin", o.copy())

    def flipped(self):
        return MotionAxis(self.kind, -self.direction, self.origin)

    def translated(self, offset):
        return MotionAxis(self.kind, self.direction, self.origin + offset)


@dataclass(frozen=True, eq=False)
class ObservedSequence:
    """Estimator input: the labeled rest cloud and per-frame dynamic clouds.

    ``frames[t]`` holds only the moving part at articulation state ``t``.
    """

    rest: PointCloud
    frames: tuple

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) == 0:
            raise EmptyInputError("sequence has no frames")
        if self.rest.labels is None:
            raise ArticError("rest cloud must be labeled")
        present = set(np.unique(self.rest.labels).tolist())
        if present != {STATIC, DYNAMIC}:
            raise ArticError("rest cloud needs both static and dynamic points")

    @property
    def rest_dynamic(self):
        return self.rest.dynamic

    @property
    def diagonal(self):
        return self.rest.diagonal

    def __len__(self):
        return len(self.frames)


def _rodrigues(v, d, cos_t, sin_t):
    # v (..., 3) rotated about unit d through the origin
    cross = np.cross(d, v)
    dot = v @ d
    return (
        v * cos_t
        + cross * sin_t
        + np.multiply.outer(dot * (1.0 - cos_t), d)
    )


def _require(axis, kind):
    if MotionKind(axis.kind) is not kind:
        raise ArticError(f"expected a {kind.value} axis, got {axis.kind.value}")
    return check_unit(axis.direction)


def rotate_points(points, direction, origin, angle):
    """Rotate an (N, 3) array about the line ``origin + t * direction``."""
    d = check_unit(direction)
    pts = _as_points(points)
    if angle == 0:
        return pts.copy()
    o = np.asarray(origin, dtype=np.float64)
    return _rodrigues(pts - o, d, np.cos(angle), np.sin(angle)) + o


def apply_revolute(cloud, axis, angle):
    """Rotate every point of ``cloud`` by ``angle`` radians about ``axis``.

    Uses the right-hand rule about ``axis.direction``.  Labels are kept.
    """
    d = _require(axis, MotionKind.REVOLUTE)
    angle = float(angle)
    if not np.isfinite(angle):
        raise ArticError("angle must be finite")
    return cloud.with_points(rotate_points(cloud.points, d, axis.origin, angle))


def apply_prismatic(cloud, axis, displacement):
    """Translate every point by ``displacement * axis.direction``."""
    d = _require(axis, MotionKind.PRISMATIC)
    displacement = float(displacement)
    if not np.isfinite(displacement):
        raise ArticError("displacement must be finite")
    if displacement == 0:
        return cloud.with_points(cloud.points)
    return cloud.with_points(cloud.points + displacement * d)


def apply_motion(cloud, axis, magnitude):
    if MotionKind(axis.kind) is MotionKind.REVOLUTE:
        return apply_revolute(cloud, axis, magnitude)
    return apply_prismatic(cloud, axis, magnitude)


def rotation_matrix(direction, angle):
    """3x3 matrix of the Rodrigues rotation about a unit ``direction``."""
    d = check_unit(direction)
    return _rodrigues(np.eye(3), d, np.cos(angle), np.sin(angle)).T


def motion_transforms(axis, magnitudes):
    """Rigid transforms ``x -> R x + t`` for a batch of magnitudes.

    Returns
    -------
    R : (K, 3, 3) ndarray
    t : (K, 3) ndarray
    """
    d = check_unit(axis.direction)
    mags = np.atleast_1d(np.asarray(magnitudes, dtype=np.float64))
    k = len(mags)
    if MotionKind(axis.kind) is MotionKind.PRISMATIC:
        return np.broadcast_to(np.eye(3), (k, 3, 3)).copy(), np.outer(mags, d)
    c, s = np.cos(mags), np.sin(mags)
    dd = np.outer(d, d)
    skew = np.array([[0, -d[2], d[1]], [d[2], 0, -d[0]], [-d[1], d[0], 0]])
    R = (
        c[:, None, None] * np.eye(3)
        + s[:, None, None] * skew
        + (1 - c)[:, None, None] * dd
    )
    o = axis.origin
    t = o - R @ o
    return R, t
