"""PCA oriented bounding boxes and the candidate joint set they induce."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError

# relative eigenvalue gap treated as a tie
_TIE_TOL = 1e-9
_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OrientedBox:
    """Box given by a center, a right-handed orthonormal frame and half-extents.

    ``frame[i]`` is the i-th principal axis (row vector), ordered by
    decreasing variance; ``half_extents[i]`` is measured along it.
    """

    center: np.ndarray
    frame: np.ndarray
    half_extents: np.ndarray

    @property
    def diagonal(self):
        return float(2 * np.linalg.norm(self.half_extents))

    def local(self, points):
        """Coordinates of ``points`` in the box frame, relative to center."""
        return (np.asarray(points) - self.center) @ self.frame.T

    def contains(self, points, slack=0.0):
        return np.all(np.abs(self.local(points)) <= self.half_extents + slack,
                      axis=-1)

    def corners(self):
        signs = np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).reshape(3, -1).T
        return self.center + (signs * self.half_extents) @ self.frame


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Seven candidate origins and six candidate directions.

    ``origins[0]`` is the box center, followed by ``center + h_i axis_i`` and
    ``center - h_i axis_i`` for i = 0, 1, 2.  ``directions`` lists the three
    principal axes, then their negations.
    """

    origins: np.ndarray
    directions: np.ndarray

    def pairs(self):
        """All 42 ``(origin_index, direction_index)`` pairs, origin-major."""
        return [(i, j) for i in range(len(self.origins))
                for j in range(len(self.directions))]


def _sphere_grid(k):
    if k == 2:
        t = np.linspace(0.0, np.pi, 720, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    # Fibonacci points on the upper hemisphere
    n = 4000
    z = (np.arange(n) + 0.5) / n
    phi = np.arange(n) * np.pi * (3 - np.sqrt(5))
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _least_quartic_direction(y):
    """Unit vector minimizing mean((y . v)^4) over the sphere of y's space.

    Grid start, then Newton steps on the sphere with the exact gradient and
    Hessian of the quartic, so the minimizer is accurate to rounding.
    """
    grid = _sphere_grid(y.shape[1])
    vals = np.mean((y @ grid.T) ** 4, axis=0)
    v = grid[np.argmin(vals)]
    for _ in range(50):
        p = y @ v
        g = 4 * (p ** 3) @ y / len(y)
        H = 12 * (y.T * p ** 2) @ y / len(y)
        P = np.eye(len(v)) - np.outer(v, v)
        lam = v @ g
        Hr = P @ (H - lam * np.eye(len(v))) @ P
        gr = P @ g
        # solve in the tangent space; the pseudo-inverse drops the normal
        step = -np.linalg.pinv(Hr, rcond=1e-12) @ gr
        if np.linalg.norm(step) > 0.1:
            step *= 0.1 / np.linalg.norm(step)
        v_new = v + step
        v_new /= np.linalg.norm(v_new)
        if np.linalg.norm(v_new - v) < 1e-15:
            v = v_new
            break
        v = v_new
    return v


def _resolve_ties(centered, evals, evecs):
    """Fix the basis inside tied eigenspaces.

    Covariance alone leaves such a basis arbitrary (a cube, a square
    plate).  There the axes are chosen one at a time as directions of
    least fourth moment, which for box-like shapes are the face normals.
    """
    order = np.argsort(-evals, kind="stable")
    scale = max(abs(evals[order[0]]), np.finfo(float).tiny)
    groups, cur = [], [order[0]]
    for idx in order[1:]:
        if abs(evals[cur[-1]] - evals[idx]) <= _TIE_TOL * scale:
            cur.append(idx)
        else:
            groups.append(cur)
            cur = [idx]
    groups.append(cur)
    evecs = evecs.copy()
    for g in groups:
        if len(g) < 2:
            continue
        basis = evecs[:, g].T
        new = []
        while len(basis) > 1:
            v = _least_quartic_direction(centered @ basis.T)
            new.append(v @ basis)
            # orthonormal complement of v inside the current basis
            q, _ = np.linalg.qr(np.column_stack([v, np.eye(len(v))]))
            basis = q[:, 1:len(v)].T @ basis
        new.append(basis[0])
        evecs[:, g] = np.array(new).T
    return evecs


def _canonical_frame(evals, evecs):
    # evecs columns; sign so the largest-magnitude component is positive
    vecs = evecs.T.copy()
    for v in vecs:
        k = np.argmax(np.abs(v) > np.abs(v).max() - 1e-12)
        if v[k] < 0:
            v *= -1
    order = list(np.argsort(-evals, kind="stable"))
    scale = max(abs(evals[order[0]]), np.finfo(float).tiny)
    # within groups of (near) equal eigenvalues, order lexicographically
    groups, cur = [], [order[0]]
    for idx in order[1:]:
        if abs(evals[cur[-1]] - evals[idx]) <= _TIE_TOL * scale:
            cur.append(idx)
        else:
            groups.append(cur)
            cur = [idx]
    groups.append(cur)
    final = []
    for g in groups:
        final.extend(sorted(g, key=lambda i: tuple(-vecs[i])))
    frame = vecs[final]
    if np.dot(np.cross(frame[0], frame[1]), frame[2]) < 0:
        frame[2] *= -1
    return evals[final], frame


def fit_obb(cloud):
    """Fit a PCA oriented bounding box to a point cloud.

    The frame holds the covariance eigenvectors in decreasing order of
    eigenvalue, made right-handed by flipping the last axis.  Center and
    half-extents come from the min/max projections on each axis.

    Parameters
    ----------
    cloud : PointCloud or (N, 3) array_like

    Returns
    -------
    OrientedBox

    Raises
    ------
    DegenerateGeometryError
        Fewer than 3 points, or the points are collinear or coincident.
        Planar clouds are accepted and yield a zero half-extent.
    """
    pts = np.asarray(getattr(cloud, "points", cloud), dtype=np.float64)
    if len(pts) < 3:
        raise DegenerateGeometryError(
            f"need at least 3 points to fit a box, got {len(pts)}", rank=None
        )
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)
    top = evals.max()
    rank = int(np.sum(evals > _RANK_TOL * max(top, 0.0))) if top > 0 else 0
    if rank < 2:
        raise DegenerateGeometryError(
            f"points are collinear or coincident (covariance rank {rank})",
            rank=rank,
        )
    evecs = _resolve_ties(centered, evals, evecs)
    _, frame = _canonical_frame(evals, evecs)
    proj = pts @ frame.T
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    center = ((lo + hi) / 2) @ frame
    half = (hi - lo) / 2
    return OrientedBox(center=center, frame=frame, half_extents=half)


def enumerate_candidates(box):
    """Candidate origins (center and six face centers) and directions."""
    origins = [box.center]
    for i in range(3):
        step = box.half_extents[i] * box.frame[i]
        origins.append(box.center + step)
        origins.append(box.center - step)
    directions = np.concatenate([box.frame, -box.frame])
    return CandidateSet(origins=np.array(origins), directions=directions)
