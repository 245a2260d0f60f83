"""Discrete joint search over oriented-bounding-box candidates.

The dynamic part is boxed at rest; every candidate (origin, direction) pair
and motion kind is scored by the chamfer distance between the moved rest
part and the observed frames, after fitting one motion magnitude per frame.
The continuous regression problem becomes a classification over 42
candidates per kind.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .chamfer import RigidChamfer, build_tree, subsample
from .errors import ArticError, EmptyInputError
from .geometry import MotionAxis, MotionKind, motion_transforms
from .obb import enumerate_candidates, fit_obb
from .runtime import ordered_map

TIE_TOL = 1e-12
_KIND_ORDER = (MotionKind.REVOLUTE, MotionKind.PRISMATIC)


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the per-frame magnitude fit.

    The coarse grid compares strided subsets of at most
    ``grid_query_points`` points of each cloud.  Golden-section refinement
    averages over at most ``refine_query_points`` query points per side,
    searched against the full clouds.  ``None`` uses every point.
    Hypothesis residuals are always computed on the full clouds.
    """

    grid_size: int = 64
    tol: float = 1e-4
    grid_query_points: int | None = 128
    refine_query_points: int | None = 128

    def to_dict(self):
        return dict(grid_size=self.grid_size, tol=self.tol,
                    grid_query_points=self.grid_query_points,
                    refine_query_points=self.refine_query_points)


EXACT = SearchConfig(grid_query_points=None, refine_query_points=None)


@dataclass(eq=False)
class Hypothesis:
    """A scored joint: axis, one magnitude per frame, summed chamfer residual.

    ``candidate`` is ``(origin_index, direction_index, kind)`` for search
    hypotheses and ``None`` for continuously optimized ones.
    """

    axis: MotionAxis
    magnitudes: np.ndarray
    residual: float
    candidate: tuple | None = None
    frame_residuals: np.ndarray = field(default=None, repr=False)


@dataclass(eq=False)
class EstimateReport:
    best: Hypothesis
    ranked: list
    timing: float
    box: object = None


def magnitude_range(kind, rest_diagonal):
    if MotionKind(kind) is MotionKind.REVOLUTE:
        return -math.pi, math.pi
    return -rest_diagonal, rest_diagonal


def _golden(f, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _single_transform(axis):
    """Fast ``m -> (R, t)`` for one magnitude on a fixed axis."""
    d, o = axis.direction, axis.origin
    if axis.kind is MotionKind.PRISMATIC:
        eye = np.eye(3)
        return lambda m: (eye, m * d)
    dd = np.outer(d, d)
    skew = np.array([[0, -d[2], d[1]], [d[2], 0, -d[0]], [-d[1], d[0], 0]])
    rest = np.eye(3) - dd

    def transform(m):
        R = dd + math.cos(m) * rest + math.sin(m) * skew
        return R, o - R @ o
    return transform


def _fit(axis, grid_index, refine_index, lo, hi, cfg):
    n = cfg.grid_size
    step = (hi - lo) / n
    grid = lo + step * np.arange(n)
    R, t = motion_transforms(axis, grid)
    coarse = grid_index.values(R, t)
    k = int(np.argmin(coarse))
    transform = _single_transform(axis)

    def f(m):
        return refine_index.value(*transform(m))

    a, b = max(lo, grid[k] - step), min(hi, grid[k] + step)
    m, fm = _golden(f, a, b, cfg.tol)
    fk = f(grid[k])
    if fk <= fm:
        m = float(grid[k])
    return float(m)


def fit_magnitude(rest_dynamic, frame, axis, config=EXACT):
    """Magnitude that best explains ``frame`` as ``rest_dynamic`` moved on ``axis``.

    A coarse grid of ``config.grid_size`` magnitudes over ``[-pi, pi]``
    (revolute) or ``[-D, D]`` (prismatic, ``D`` the rest diagonal) picks a
    bracket that golden-section search narrows to width ``config.tol``.

    Returns
    -------
    magnitude : float
        Radians or model units.
    residual : float
        Chamfer distance achieved at ``magnitude``, on the full clouds.
    """
    src = np.asarray(getattr(rest_dynamic, "points", rest_dynamic))
    tgt = np.asarray(getattr(frame, "points", frame))
    if len(src) == 0 or len(tgt) == 0:
        raise EmptyInputError("fit_magnitude needs non-empty clouds")
    full = RigidChamfer(src, tgt)
    grid_idx = RigidChamfer(subsample(src, config.grid_query_points),
                            subsample(tgt, config.grid_query_points))
    ref_idx = RigidChamfer(src, tgt, config.refine_query_points,
                           full.source_tree, full.target_tree)
    diag = float(np.linalg.norm(np.ptp(src, axis=0)))
    lo, hi = magnitude_range(axis.kind, diag)
    m = _fit(axis, grid_idx, ref_idx, lo, hi, config)
    R, t = motion_transforms(axis, [m])
    return m, float(full.values(R, t)[0])


def _tie_sorted(hyps, order_key):
    """Sort by residual; residuals within TIE_TOL keep candidate order."""
    hyps = sorted(hyps, key=lambda h: (h.residual, order_key(h)))
    out, i = [], 0
    while i < len(hyps):
        j = i + 1
        while j < len(hyps) and hyps[j].residual - hyps[i].residual <= TIE_TOL:
            j += 1
        out.extend(sorted(hyps[i:j], key=order_key))
        i = j
    return out


def _canonical(axis, mags):
    """Flip direction so magnitudes are predominantly positive."""
    pos, neg = int(np.sum(mags > 0)), int(np.sum(mags < 0))
    if neg > pos or (neg == pos and mags.sum() < 0):
        return axis.flipped(), -mags
    return axis, mags


def search(seq, kinds=_KIND_ORDER, config=SearchConfig()):
    """Score every candidate joint of the rest dynamic part against ``seq``.

    Parameters
    ----------
    seq : ObservedSequence
    kinds : iterable of MotionKind
        Motion kinds to consider; both by default.
    config : SearchConfig

    Returns
    -------
    EstimateReport
        ``ranked`` holds ``42 * len(kinds)`` hypotheses by increasing
        residual.  Ties (within 1e-12) go to the lower candidate index:
        origin-major, then direction, revolute before prismatic.
    """
    start = time.perf_counter()
    kinds = sorted({MotionKind(k) for k in kinds}, key=_KIND_ORDER.index)
    if not kinds:
        raise ArticError("at least one motion kind is required")
    if len(seq.frames) == 0:
        raise EmptyInputError("sequence has no frames")
    rest = seq.rest_dynamic
    box = fit_obb(rest)
    cands = enumerate_candidates(box)
    src = rest.points
    centroid = rest.centroid
    lo_hi = {k: magnitude_range(k, rest.diagonal) for k in kinds}

    s_tree = build_tree(src)
    src_grid = subsample(src, config.grid_query_points)
    s_grid_tree = build_tree(src_grid)
    per_frame = []
    for fr in seq.frames:
        if len(fr) == 0:
            raise EmptyInputError("empty frame")
        full = RigidChamfer(src, fr.points, None, s_tree)
        per_frame.append((
            full,
            RigidChamfer(src_grid, subsample(fr.points, config.grid_query_points),
                         None, s_grid_tree),
            RigidChamfer(src, fr.points, config.refine_query_points, s_tree,
                         full.target_tree),
        ))

    # (o, -d) with magnitude -m moves points exactly like (o, d) with m, and
    # prismatic motion ignores the origin: only these jobs need fitting.
    jobs = []
    for kind in kinds:
        origin_ids = range(7) if kind is MotionKind.REVOLUTE else (0,)
        for oi in origin_ids:
            for di in range(3):
                jobs.append((kind, oi, di))

    def run(job):
        kind, oi, di = job
        origin = cands.origins[oi] if kind is MotionKind.REVOLUTE else centroid
        axis = MotionAxis(kind, cands.directions[di], origin)
        lo, hi = lo_hi[kind]
        mags = np.array([_fit(axis, g, r, lo, hi, config)
                         for _, g, r in per_frame])
        res = np.array([
            full.values(*motion_transforms(axis, [m]))[0]
            for (full, _, _), m in zip(per_frame, mags)
        ])
        return axis, mags, res

    fitted = dict(zip(jobs, ordered_map(run, jobs)))

    hyps = []
    for kind in kinds:
        for oi in range(7):
            for dj in range(6):
                di, sign = dj % 3, (1.0 if dj < 3 else -1.0)
                axis, mags, res = fitted[
                    (kind, oi if kind is MotionKind.REVOLUTE else 0, di)
                ]
                if sign < 0:
                    axis, mags = axis.flipped(), -mags
                axis, mags = _canonical(axis, mags)
                hyps.append(Hypothesis(
                    axis=axis, magnitudes=mags, residual=float(res.sum()),
                    candidate=(oi, dj, kind), frame_residuals=res,
                ))

    def order_key(h):
        oi, dj, kind = h.candidate
        return (oi, dj, _KIND_ORDER.index(kind))

    ranked = _tie_sorted(hyps, order_key)
    return EstimateReport(best=ranked[0], ranked=ranked,
                          timing=time.perf_counter() - start, box=box)
