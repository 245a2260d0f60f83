"""Synthetic articulated objects with known joints, plus a noise model.

Each template is a static body box and one moving panel or drawer box.
Objects are scaled so the rest-state bounding box diagonal is 1 and, when
seeded, randomly sized and posed.  ``degrade`` jitters, thins, and pollutes
the observed frames the way a sparse multi-view reconstruction would.
"""

import math
from dataclasses import dataclass, replace
from itertools import product

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ConstructionError, OverDegradedError
from .geometry import (
    DYNAMIC, STATIC, MotionAxis, MotionKind, ObservedSequence, PointCloud,
    apply_motion,
)
from .obb import OrientedBox
from .runtime import substream

TEMPLATES = ("door", "drawer", "lid", "laptop", "trashcan_lid")
DEFAULT_POINTS = 2048
DEFAULT_FRAMES = 10
MIN_FRAME_POINTS = 10


@dataclass(frozen=True, eq=False)
class ObjectTemplate:
    """A posed, unit-diagonal articulated object with its ground-truth joint.

    ``body_dims`` and ``panel_dims`` are full box sizes (after scaling) of the
    static body and the moving part; ``gt_profile`` holds one magnitude per
    frame (radians or model units).
    """

    name: str
    body_dims: tuple
    panel_dims: tuple
    gt_axis: MotionAxis
    gt_profile: tuple
    static_box: OrientedBox
    dynamic_box: OrientedBox
    diagonal: float = 1.0

    def __post_init__(self):
        if self.name not in TEMPLATES:
            raise ConstructionError(f"unknown template {self.name!r}")
        for dims in (self.body_dims, self.panel_dims):
            if len(dims) != 3 or not all(np.isfinite(dims)) or min(dims) <= 0:
                raise ConstructionError(f"invalid box dimensions {dims}")
        kind = MotionKind.PRISMATIC if self.name == "drawer" else MotionKind.REVOLUTE
        if self.gt_axis.kind is not kind:
            raise ConstructionError(f"{self.name} needs a {kind.value} joint")
        if len(self.gt_profile) == 0 or not all(np.isfinite(self.gt_profile)):
            raise ConstructionError("profile must be a non-empty finite list")

    def params(self):
        """JSON-friendly description of the template."""
        return {
            "name": self.name,
            "body_dims": [float(x) for x in self.body_dims],
            "panel_dims": [float(x) for x in self.panel_dims],
            "gt_profile": [float(x) for x in self.gt_profile],
            "diagonal": float(self.diagonal),
        }


def _box(center, dims):
    return OrientedBox(center=np.asarray(center, float), frame=np.eye(3),
                       half_extents=np.asarray(dims, float) / 2)


def _u(rng, lo, hi):
    return (lo + hi) / 2 if rng is None else float(rng.uniform(lo, hi))


def _canonical_parts(name, rng, hinge_offset):
    """Body box, moving box, joint kind/direction/origin, default extent."""
    if name == "door":
        W, D, H = _u(rng, 0.5, 0.8), _u(rng, 0.35, 0.55), _u(rng, 0.95, 1.3)
        t = _u(rng, 0.02, 0.04)
        body, panel = (W, D, H), (W, t, H)
        pc = (0, D / 2 + t / 2, 0)
        origin = (-W / 2 + hinge_offset * W, D / 2 + t / 2, 0)
        return body, (0, 0, 0), panel, pc, (0, 0, 1), origin, math.radians(_u(rng, 60, 100))
    if name == "drawer":
        W, D, H = _u(rng, 0.7, 0.9), _u(rng, 0.4, 0.55), _u(rng, 0.2, 0.3)
        body, panel = (W, D, H), (0.9 * W, 0.9 * D, 0.8 * H)
        pc = (0, 0.05 * D, 0)
        return body, (0, 0, 0), panel, pc, (0, 1, 0), pc, 0.4 * panel[1]
    if name == "lid":
        W, D, H = _u(rng, 0.6, 0.9), _u(rng, 0.35, 0.5), _u(rng, 0.3, 0.5)
        t = _u(rng, 0.02, 0.04)
        body, panel = (W, D, H), (W, D, t)
        pc = (0, 0, H / 2 + t / 2)
        origin = (0, -D / 2 + hinge_offset * D, H / 2 + t / 2)
        return body, (0, 0, 0), panel, pc, (1, 0, 0), origin, math.radians(_u(rng, 60, 110))
    if name == "laptop":
        W, D, tb = _u(rng, 0.3, 0.4), _u(rng, 0.2, 0.26), _u(rng, 0.015, 0.025)
        ts, Hs = _u(rng, 0.006, 0.012), _u(rng, 0.9, 1.0) * D
        body, panel = (W, D, tb), (W, ts, Hs)
        y = -D / 2 + ts / 2
        pc = (0, y, tb / 2 + Hs / 2)
        origin = (0, y, tb / 2 + hinge_offset * Hs)
        return body, (0, 0, 0), panel, pc, (1, 0, 0), origin, math.radians(_u(rng, 30, 60))
    if name == "trashcan_lid":
        W, D, H = _u(rng, 0.3, 0.4), _u(rng, 0.2, 0.26), _u(rng, 0.5, 0.7)
        t = _u(rng, 0.015, 0.03)
        body, panel = (W, D, H), (W, D, t)
        pc = (0, 0, H / 2 + t / 2)
        origin = (0, -D / 2 + hinge_offset * D, H / 2 + t / 2)
        return body, (0, 0, 0), panel, pc, (1, 0, 0), origin, math.radians(_u(rng, 70, 110))
    raise ConstructionError(f"unknown template {name!r}; expected one of {TEMPLATES}")


def make_template(name, seed=None, frames=DEFAULT_FRAMES, profile=None,
                  hinge_offset=0.0, rotate=None):
    """Build a posed template.

    Parameters
    ----------
    name : str
        One of :data:`TEMPLATES`.
    seed : int, optional
        Randomizes dimensions, opening range and (unless ``rotate=False``)
        the global orientation.  ``None`` gives mid-range dimensions in the
        canonical pose.
    frames : int
        Length of the default profile ``linspace(0, extent, frames)``.
    profile : sequence of float, optional
        Explicit per-frame magnitudes in canonical (pre-scaling) units;
        radians for revolute joints.
    hinge_offset : float
        Moves revolute hinges inward by this fraction of the panel size, off
        the bounding-box face center.  0 keeps them on it.
    """
    if not 0 <= hinge_offset <= 0.5:
        raise ConstructionError("hinge_offset must be in [0, 0.5]")
    if frames < 1:
        raise ConstructionError("frames must be >= 1")
    if name not in TEMPLATES:
        raise ConstructionError(f"unknown template {name!r}; expected one of {TEMPLATES}")
    rng = None if seed is None else substream(seed, "template", TEMPLATES.index(name))
    body, bc, panel, pc, d, o, extent = _canonical_parts(name, rng, hinge_offset)
    if profile is None:
        profile = np.linspace(0.0, extent, frames)
    profile = np.asarray(profile, dtype=float)

    if rotate is None:
        rotate = seed is not None
    R = Rotation.random(random_state=rng).as_matrix() if rotate else np.eye(3)
    boxes = [_box(bc, body), _box(pc, panel)]
    corners = np.concatenate([b.corners() for b in boxes]) @ R.T
    scale = 1.0 / float(np.linalg.norm(np.ptp(corners, axis=0)))

    def place(b):
        return OrientedBox(center=scale * (R @ b.center), frame=b.frame @ R.T,
                           half_extents=scale * b.half_extents)

    kind = MotionKind.PRISMATIC if name == "drawer" else MotionKind.REVOLUTE
    axis = MotionAxis(kind, R @ np.asarray(d, float), scale * (R @ np.asarray(o, float)))
    if kind is MotionKind.PRISMATIC:
        profile = profile * scale
    return ObjectTemplate(
        name=name,
        body_dims=tuple(scale * np.asarray(body)),
        panel_dims=tuple(scale * np.asarray(panel)),
        gt_axis=axis,
        gt_profile=tuple(float(x) for x in profile),
        static_box=place(boxes[0]),
        dynamic_box=place(boxes[1]),
    )


def _largest_remainder(total, weights):
    w = np.asarray(weights, float)
    raw = total * w / w.sum()
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def sample_box_surface(box, n, rng):
    """Area-weighted stratified samples on the surface of a box.

    Points come in groups of eight mirror images across the three box
    mid-planes (Latin-hypercube stratified on each face), so the sample
    covariance is diagonal in the box frame.  The ``n % 8`` leftover points
    sit on face centers, which keeps that property.
    """
    h = np.asarray(box.half_extents, float)
    areas = [h[1] * h[2], h[0] * h[2], h[0] * h[1]]
    counts = _largest_remainder(n // 8, areas)
    local = []
    for i, c in enumerate(counts):
        if c == 0:
            continue
        j, k = [a for a in range(3) if a != i]
        base = np.zeros((c, 3))
        base[:, i] = h[i]
        base[:, j] = (rng.permutation(c) + rng.random(c)) / c * h[j]
        base[:, k] = (rng.permutation(c) + rng.random(c)) / c * h[k]
        for signs in product((1.0, -1.0), repeat=3):
            local.append(base * signs)
    faces = [s * h[i] * np.eye(3)[i] for i in range(3) for s in (1.0, -1.0)]
    local.extend(faces[r % 6][None] for r in range(n % 8))
    pts = np.concatenate(local)[rng.permutation(n)]
    return box.center + pts @ box.frame


def generate(template, points_per_part=DEFAULT_POINTS, frames=None, seed=0):
    """Sample a template and play its ground-truth motion.

    Returns
    -------
    seq : ObservedSequence
        Labeled rest cloud (static points first) and one dynamic-part cloud
        per profile entry.
    gt : MotionAxis
    """
    if points_per_part < 100:
        raise ConstructionError("points_per_part must be >= 100")
    if frames is not None and frames != len(template.gt_profile):
        raise ConstructionError(
            f"template profile has {len(template.gt_profile)} frames, asked for {frames}"
        )
    rng = substream(seed, "generate")
    static = sample_box_surface(template.static_box, points_per_part, rng)
    dynamic = sample_box_surface(template.dynamic_box, points_per_part, rng)
    labels = np.r_[np.full(len(static), STATIC), np.full(len(dynamic), DYNAMIC)]
    rest = PointCloud(np.concatenate([static, dynamic]), labels)
    moving = PointCloud(dynamic)
    out = [apply_motion(moving, template.gt_axis, m) for m in template.gt_profile]
    return ObservedSequence(rest=rest, frames=out), template.gt_axis


@dataclass(frozen=True)
class DegradeConfig:
    """Noise model: jitter (fraction of diagonal), dropout and outlier rates."""

    jitter_sigma: float = 0.0
    dropout_rate: float = 0.0
    outlier_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.jitter_sigma >= 0 and math.isfinite(self.jitter_sigma)):
            raise ValueError("jitter_sigma must be finite and >= 0")
        for name in ("dropout_rate", "outlier_rate"):
            r = getattr(self, name)
            if not 0 <= r < 1:
                raise ValueError(f"{name} must be in [0, 1)")

    @property
    def is_identity(self):
        return self.jitter_sigma == 0 and self.dropout_rate == 0 and self.outlier_rate == 0

    def to_dict(self):
        return dict(jitter_sigma=self.jitter_sigma, dropout_rate=self.dropout_rate,
                    outlier_rate=self.outlier_rate, seed=self.seed)


def degrade(seq, cfg):
    """Corrupt every frame of ``seq``; the rest cloud is left untouched.

    Per frame: isotropic Gaussian jitter with std ``jitter_sigma * diagonal``,
    removal of ``round(dropout_rate * n)`` random points, then
    ``round(outlier_rate * n)`` uniform outliers in the rest bounding box
    inflated 1.2x about its center.

    Raises
    ------
    OverDegradedError
        If dropout leaves fewer than 10 points in a frame.
    """
    if cfg.is_identity:
        return seq
    diag = seq.rest.diagonal
    lo, hi = seq.rest.points.min(axis=0), seq.rest.points.max(axis=0)
    mid, half = (lo + hi) / 2, 0.6 * (hi - lo)
    frames = []
    for t, fr in enumerate(seq.frames):
        rng = substream(cfg.seed, "degrade", t)
        pts = fr.points
        n = len(pts)
        if cfg.jitter_sigma > 0:
            pts = pts + rng.normal(0.0, cfg.jitter_sigma * diag, size=pts.shape)
        n_drop = int(round(cfg.dropout_rate * n))
        if n_drop:
            keep = np.sort(rng.choice(n, size=n - n_drop, replace=False))
            pts = pts[keep]
        if len(pts) < MIN_FRAME_POINTS:
            raise OverDegradedError(
                f"frame {t} keeps {len(pts)} points after dropout (< {MIN_FRAME_POINTS})"
            )
        n_out = int(round(cfg.outlier_rate * n))
        if n_out:
            pts = np.concatenate([pts, rng.uniform(mid - half, mid + half, (n_out, 3))])
        frames.append(PointCloud(pts))
    return ObservedSequence(rest=seq.rest, frames=frames)


@dataclass(frozen=True, eq=False)
class SuiteItem:
    object_id: str
    seq: ObservedSequence
    gt: MotionAxis
    template: ObjectTemplate

    @property
    def diagonal(self):
        return self.template.diagonal


def make_suite(names=TEMPLATES, seeds=range(10), degrade_cfg=None,
               points_per_part=DEFAULT_POINTS, frames=DEFAULT_FRAMES,
               hinge_offset=0.0):
    """One seeded object per (template, seed), optionally degraded.

    The degradation seed of each object is derived from ``degrade_cfg.seed``,
    the template and the object seed, so objects get independent noise.
    """
    items = []
    for name in names:
        for s in seeds:
            tpl = make_template(name, seed=s, frames=frames, hinge_offset=hinge_offset)
            seq, gt = generate(tpl, points_per_part, seed=s)
            if degrade_cfg is not None and not degrade_cfg.is_identity:
                rng = substream(degrade_cfg.seed, "suite", TEMPLATES.index(name), s)
                cfg = replace(degrade_cfg, seed=int(rng.integers(2**31)))
                seq = degrade(seq, cfg)
            items.append(SuiteItem(f"{name}-{s:03d}", seq, gt, tpl))
    return items


def ablation_suite(jitter, n_objects, templates=TEMPLATES, dropout=0.5, outliers=0.05,
                   points=DEFAULT_POINTS, frames=DEFAULT_FRAMES, seed=0):
    """Degraded objects for one noise level of the method comparison.

    Object ``i`` uses template ``templates[i % len(templates)]`` and seed
    ``seed + i``.
    """
    deg = DegradeConfig(jitter, dropout, outliers, seed=seed)
    items = []
    for i in range(n_objects):
        name = templates[i % len(templates)]
        items += make_suite([name], [seed + i], deg, points_per_part=points, frames=frames)
    return items
