"""Symmetric chamfer distance.

Convention: squared Euclidean distances, mean over each cloud, summed over
both directions::

    CD(A, B) = mean_a min_b |a - b|^2 + mean_b min_a |a - b|^2

Nearest neighbours are exact (pykdtree's kd-tree); :func:`chamfer_brute_force`
is the all-pairs reference.
"""

from dataclasses import dataclass

import numpy as np
from pykdtree.kdtree import KDTree

from .errors import EmptyInputError, FrameCountError

CONVENTION = "squared-distance, mean-reduced, sum of both directions"


@dataclass(frozen=True)
class ChamferResult:
    value: float
    forward_term: float
    backward_term: float


def _points(cloud, name):
    pts = np.asarray(getattr(cloud, "points", cloud), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3)")
    if len(pts) == 0:
        raise EmptyInputError(f"{name} is empty")
    return pts


def build_tree(points):
    return KDTree(np.ascontiguousarray(points, dtype=np.float64))


def nearest_sq(tree, queries):
    """Squared distance and index of the nearest tree point for each query."""
    q = np.ascontiguousarray(queries, dtype=np.float64)
    return tree.query(q, k=1, sqr_dists=True)


def chamfer_distance(a, b):
    """Chamfer distance between two non-empty clouds.

    Examples
    --------
    >>> chamfer_distance([[0, 0, 0]], [[1, 0, 0]]).value
    2.0
    """
    pa, pb = _points(a, "a"), _points(b, "b")
    fwd, _ = nearest_sq(build_tree(pb), pa)
    bwd, _ = nearest_sq(build_tree(pa), pb)
    f, g = float(fwd.mean()), float(bwd.mean())
    return ChamferResult(value=f + g, forward_term=f, backward_term=g)


def chamfer_brute_force(a, b):
    """O(n*m) reference implementation; no spatial index."""
    pa, pb = _points(a, "a"), _points(b, "b")
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1)
    f, g = float(d2.min(axis=1).mean()), float(d2.min(axis=0).mean())
    return ChamferResult(value=f + g, forward_term=f, backward_term=g)


def chamfer_sequence(pred, obs):
    """Sum of per-frame chamfer values over aligned frame lists."""
    pred, obs = list(pred), list(obs)
    if len(pred) != len(obs):
        raise FrameCountError(
            f"frame count mismatch: {len(pred)} predicted vs {len(obs)} observed"
        )
    if not pred:
        raise EmptyInputError("no frames")
    return float(sum(chamfer_distance(p, o).value for p, o in zip(pred, obs)))


def _stride_subset(n, limit):
    if limit is None or n <= limit:
        return np.arange(n)
    return np.floor(np.arange(limit) * (n / limit)).astype(np.intp)


def subsample(points, limit):
    """Evenly strided subset of at most ``limit`` rows (all if ``None``)."""
    points = np.asarray(points)
    return points[_stride_subset(len(points), limit)]


class RigidChamfer:
    """Chamfer between a source cloud moved rigidly and a fixed target.

    Both kd-trees are built once.  For a rigid map ``T`` the backward term
    uses ``min_q |f - T q| = min_q |T^-1 f - q|``, so no tree is rebuilt per
    transform.  With ``query_points`` set, each mean is taken over an evenly
    strided subset of at most that many query points; nearest neighbours are
    still searched in the full clouds.
    """

    def __init__(self, source, target, query_points=None, source_tree=None,
                 target_tree=None):
        self.source = _points(source, "source")
        self.target = _points(target, "target")
        if source_tree is None:
            source_tree = build_tree(self.source)
        if target_tree is None:
            target_tree = build_tree(self.target)
        self.source_tree, self.target_tree = source_tree, target_tree
        self.src_q = self.source[_stride_subset(len(self.source), query_points)]
        self.tgt_q = self.target[_stride_subset(len(self.target), query_points)]

    def values(self, R, t):
        """Chamfer values for a batch of transforms ``R (K,3,3)``, ``t (K,3)``."""
        R = np.asarray(R).reshape(-1, 3, 3)
        t = np.asarray(t).reshape(-1, 3)
        moved = np.einsum("kij,nj->kni", R, self.src_q) + t[:, None, :]
        back = np.einsum("kji,knj->kni", R, self.tgt_q[None] - t[:, None, :])
        fwd, _ = nearest_sq(self.target_tree, moved.reshape(-1, 3))
        bwd, _ = nearest_sq(self.source_tree, back.reshape(-1, 3))
        k = len(R)
        return fwd.reshape(k, -1).mean(axis=1) + bwd.reshape(k, -1).mean(axis=1)

    def value(self, R, t):
        """Chamfer value for a single transform."""
        fwd, _ = nearest_sq(self.target_tree, self.src_q @ R.T + t)
        bwd, _ = nearest_sq(self.source_tree, (self.tgt_q - t) @ R)
        return float(fwd.mean() + bwd.mean())

    def assignments(self, R, t):
        """Nearest-neighbour indices ``(forward, backward)`` under ``(R, t)``."""
        _, fi = nearest_sq(self.target_tree, self.src_q @ R.T + t)
        _, bi = nearest_sq(self.source_tree, (self.tgt_q - t) @ R)
        return fi, bi

    def correspondences(self, R, t):
        """Weighted (source, target) pairs realising the chamfer value.

        Returns ``src (P,3)``, ``tgt (P,3)``, ``w (P,)`` such that the chamfer
        value equals ``sum(w * |R src + t - tgt|^2)``.
        """
        moved = self.src_q @ R.T + t
        _, fi = nearest_sq(self.target_tree, moved)
        back = (self.tgt_q - t) @ R
        _, bi = nearest_sq(self.source_tree, back)
        src = np.concatenate([self.src_q, self.source[bi]])
        tgt = np.concatenate([self.target[fi], self.tgt_q])
        w = np.concatenate([
            np.full(len(self.src_q), 1.0 / len(self.src_q)),
            np.full(len(self.tgt_q), 1.0 / len(self.tgt_q)),
        ])
        return src, tgt, w
