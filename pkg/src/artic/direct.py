"""Continuous joint fitting by projected gradient descent on chamfer loss.

The loss for a candidate joint (direction ``d``, origin ``o``) and per-frame
magnitudes ``m_t`` is

    L = sum_t CD(move(rest_dynamic, d, o, m_t), frame_t)

The gradient is analytic with nearest-neighbour assignments held fixed at
the current point; a central-difference gradient is kept for checking it.
The direction lives on the unit sphere and is re-normalized after each
step.  Steps that raise the loss are halved, up to 20 times.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .chamfer import RigidChamfer, build_tree, subsample
from .errors import ArticError, NumericalFailureError
from .geometry import MotionAxis, MotionKind, normalize
from .runtime import ordered_map, substream
from .search import Hypothesis, SearchConfig, _canonical, _fit, magnitude_range, search

MAX_HALVINGS = 20


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of the direct optimizer.

    ``step_size`` is the largest parameter move of a full step: radians for
    the direction and revolute angles, a fraction of the rest diagonal for
    origins and prismatic displacements.  ``fd_step`` is the finite
    difference step as a fraction of the diagonal.  ``query_points`` caps
    the points averaged per chamfer direction while descending (``None``
    uses all points); restarts are compared, and the returned residual
    computed, on the full clouds.
    """

    max_iters: int = 500
    step_size: float = 0.1
    restarts: int = 8
    fd_step: float = 1e-4
    convergence_tol: float = 1e-8
    seed: int = 0
    seed_from_algo: bool = False
    query_points: int | None = 128
    loss_floor: float = 1e-14

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 1:
            raise ArticError("max_iters and restarts must be >= 1")
        for name in ("step_size", "fd_step", "convergence_tol"):
            if not getattr(self, name) > 0:
                raise ArticError(f"{name} must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        unknown = set(data) - set(known)
        if unknown:
            raise ArticError(f"unknown optimizer settings: {sorted(unknown)}")
        return cls(**known)


@dataclass(eq=False)
class OptTrace:
    losses: list = field(default_factory=list)
    final: Hypothesis = None
    restart: int = 0
    halvings: int = 0
    restart_losses: list = field(default_factory=list)


class ChamferObjective:
    """Summed chamfer loss of one motion kind over a sequence, with gradient."""

    def __init__(self, seq, kind, query_points=None):
        self.kind = MotionKind(kind)
        self.rest = seq.rest_dynamic
        src = self.rest.points
        self.diagonal = self.rest.diagonal
        tree = build_tree(src)
        self.frames = [RigidChamfer(src, fr.points, query_points, tree)
                       for fr in seq.frames]
        self.centroid = self.rest.centroid

    def __len__(self):
        return len(self.frames)

    def _transform(self, d, o, m):
        if self.kind is MotionKind.PRISMATIC:
            return np.eye(3), m * d
        c, s = math.cos(m), math.sin(m)
        dd = np.outer(d, d)
        skew = np.array([[0, -d[2], d[1]], [d[2], 0, -d[0]], [-d[1], d[0], 0]])
        R = c * np.eye(3) + s * skew + (1 - c) * dd
        return R, o - R @ o

    def value(self, d, o, mags):
        return float(sum(fr.value(*self._transform(d, o, m))
                         for fr, m in zip(self.frames, mags)))

    def frame_values(self, d, o, mags):
        return np.array([fr.value(*self._transform(d, o, m))
                         for fr, m in zip(self.frames, mags)])

    def assignments(self, d, o, mags):
        """Concatenated nearest-neighbour indices of every frame.

        The loss is smooth between two parameter sets with equal
        assignments.
        """
        parts = []
        for fr, m in zip(self.frames, mags):
            parts.extend(fr.assignments(*self._transform(d, o, m)))
        return np.concatenate(parts)

    def value_and_grad(self, d, o, mags):
        """Loss and gradients ``(g_d, g_o, g_m)``; ``g_d`` is not projected."""
        loss = 0.0
        gd, go = np.zeros(3), np.zeros(3)
        gm = np.zeros(len(mags))
        revolute = self.kind is MotionKind.REVOLUTE
        for t, (fr, m) in enumerate(zip(self.frames, mags)):
            R, tr = self._transform(d, o, m)
            q, f, w = fr.correspondences(R, tr)
            r = q @ R.T + tr - f
            loss += float(w @ np.einsum("ij,ij->i", r, r))
            g = 2 * w[:, None] * r
            gsum = g.sum(axis=0)
            if not revolute:
                gm[t] = gsum @ d
                gd += m * gsum
                continue
            v = q - o
            c, s = math.cos(m), math.sin(m)
            dv = v @ d
            gdot = g @ d
            vg = v.T @ g  # sum_i v_i g_i^T
            # sum_i g_i . (d x v_i) and sum_i v_i x g_i, from the 3x3 moment
            g_dxv = np.dot(d, [vg[1, 2] - vg[2, 1], vg[2, 0] - vg[0, 2],
                               vg[0, 1] - vg[1, 0]])
            v_x_g = np.array([vg[1, 2] - vg[2, 1], vg[2, 0] - vg[0, 2],
                              vg[0, 1] - vg[1, 0]])
            gm[t] = -s * np.trace(vg) + c * g_dxv + s * (dv @ gdot)
            go += gsum - R.T @ gsum
            gd += s * v_x_g + (1 - c) * (dv @ g + gdot @ v)
        return loss, gd, go, gm

    def smooth_at(self, d, o, mags, step):
        """True when no assignment changes at the points :meth:`fd_grad` probes."""
        h = step * self.diagonal
        base = self.assignments(d, o, mags)
        probes = [(normalize(d + s * h * b), o, mags)
                  for b in tangent_basis(d) for s in (1, -1)]
        if self.kind is MotionKind.REVOLUTE:
            probes += [(d, o + s * h * e, mags) for e in np.eye(3) for s in (1, -1)]
        for t in range(len(mags)):
            for s in (1, -1):
                m = np.array(mags, float)
                m[t] += s * h
                probes.append((d, o, m))
        return all(np.array_equal(base, self.assignments(*p)) for p in probes)

    def fd_grad(self, d, o, mags, step):
        """Central differences: tangent-plane direction, origin, magnitudes.

        Direction perturbations are taken along an orthonormal tangent basis
        and re-normalized, so the result is comparable with the projected
        analytic gradient expressed in that basis.
        """
        h = step * self.diagonal
        basis = tangent_basis(d)
        g_tan = np.zeros(2)
        for i, b in enumerate(basis):
            lp = self.value(normalize(d + h * b), o, mags)
            lm = self.value(normalize(d - h * b), o, mags)
            g_tan[i] = (lp - lm) / (2 * h)
        go = np.zeros(3)
        if self.kind is MotionKind.REVOLUTE:
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                go[i] = (self.value(d, o + e, mags) - self.value(d, o - e, mags)) / (2 * h)
        gm = np.zeros(len(mags))
        for t in range(len(mags)):
            mp, mm = np.array(mags, float), np.array(mags, float)
            mp[t] += h
            mm[t] -= h
            gm[t] = (self.value(d, o, mp) - self.value(d, o, mm)) / (2 * h)
        return g_tan, go, gm


def tangent_basis(d):
    """Two unit vectors spanning the plane orthogonal to ``d``."""
    a = np.eye(3)[np.argmin(np.abs(d))]
    u = normalize(np.cross(d, a))
    return np.array([u, np.cross(d, u)])


def _descend(obj, d, o, mags, cfg, restart):
    """One projected-gradient run from ``(d, o, mags)``.

    Works in coordinates scaled so a unit move equals ``step_size``
    (radians or fraction of the diagonal).  Step lengths follow the
    Barzilai-Borwein rule, capped at one scaled unit, and are halved until
    the loss decreases.
    """
    diag = obj.diagonal
    revolute = obj.kind is MotionKind.REVOLUTE
    T = len(mags)
    s_len = cfg.step_size * diag
    scale = np.r_[np.full(3, cfg.step_size),
                  np.full(3, s_len if revolute else 0.0),
                  np.full(T, cfg.step_size if revolute else s_len)]
    floor = cfg.loss_floor * diag * diag

    def pack(d, o, m):
        return np.r_[d, o, m]

    def unpack(x):
        return normalize(x[:3]), x[3:6], x[6:]

    def scaled_grad(d, gd, go, gm):
        gd = gd - (gd @ d) * d
        g = scale * np.r_[gd, go, gm]
        if not np.all(np.isfinite(g)):
            raise NumericalFailureError("non-finite gradient", iteration=len(trace.losses))
        return g

    x = pack(np.asarray(d, float), np.asarray(o, float), np.asarray(mags, float))
    def evaluate(x, iteration):
        if not np.all(np.isfinite(x)):
            raise NumericalFailureError("non-finite parameters", iteration=iteration)
        try:
            with np.errstate(over="raise", invalid="raise"):
                return obj.value_and_grad(*unpack(x))
        except (ValueError, FloatingPointError) as exc:
            raise NumericalFailureError(f"loss evaluation failed: {exc}",
                                        iteration=iteration) from None

    loss, gd, go, gm = evaluate(x, 0)
    if not np.isfinite(loss):
        raise NumericalFailureError("non-finite initial loss", iteration=0)
    trace = OptTrace(losses=[loss], restart=restart)
    g = scaled_grad(x[:3], gd, go, gm)
    alpha = None
    while len(trace.losses) < cfg.max_iters and loss > floor:
        it = len(trace.losses)
        gmax = np.abs(g).max()
        if gmax == 0:
            break
        if alpha is None or not np.isfinite(alpha) or alpha <= 0:
            alpha = 1.0 / gmax
        alpha = min(alpha, 1.0 / gmax)
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            x_new = x - alpha * scale * g
            x_new[:3] = normalize(x_new[:3])
            new, gd, go, gm = evaluate(x_new, it)
            if np.isfinite(new) and new < loss:
                accepted = True
                break
            alpha /= 2
            trace.halvings += 1
        if not accepted:
            break
        loss = new
        g_new = scaled_grad(x_new[:3], gd, go, gm)
        dy = np.divide(x_new - x, scale, out=np.zeros_like(x), where=scale > 0)
        dg = g_new - g
        curv = dy @ dg
        alpha = (dy @ dy) / curv if curv > 0 else None
        x, g = x_new, g_new
        trace.losses.append(loss)
        if len(trace.losses) > 10:
            old = trace.losses[-11]
            if old - loss <= cfg.convergence_tol * old:
                break
    d, o, m = unpack(x)
    return d, o, m, trace


def initial_magnitudes(seq, axis, config=SearchConfig()):
    """Per-frame magnitudes fitted by the discrete searcher's 1-D routine."""
    src = seq.rest_dynamic.points
    lo, hi = magnitude_range(axis.kind, seq.rest_dynamic.diagonal)
    full_tree = build_tree(src)
    g_src = subsample(src, config.grid_query_points)
    g_tree = build_tree(g_src)
    out = []
    for fr in seq.frames:
        grid = RigidChamfer(g_src, subsample(fr.points, config.grid_query_points),
                            None, g_tree)
        ref = RigidChamfer(src, fr.points, config.refine_query_points, full_tree)
        out.append(_fit(axis, grid, ref, lo, hi, config))
    return np.array(out)


def optimize(seq, kind, cfg=OptimizerConfig()):
    """Fit a joint of ``kind`` to ``seq`` by multi-start gradient descent.

    Restarts begin at uniformly random directions with the origin at the
    dynamic part centroid and magnitudes from the 1-D fit.  With
    ``cfg.seed_from_algo`` the first restart instead starts from the best
    discrete-search hypothesis.  The lowest final loss wins; ties go to the
    lower restart index.

    Returns
    -------
    best : Hypothesis
        ``residual`` is the full-resolution loss at the final parameters
        (equal to the last trace entry when ``cfg.query_points`` is None).
    trace : OptTrace
        Loss history of the winning restart.

    Raises
    ------
    NumericalFailureError
        The loss or its gradient became non-finite.
    """
    kind = MotionKind(kind)
    obj = ChamferObjective(seq, kind, cfg.query_points)
    if not np.isfinite(obj.diagonal):
        raise NumericalFailureError("object extent overflows", iteration=0)
    centroid = obj.centroid

    def starts(r):
        if r == 0 and cfg.seed_from_algo:
            h = search(seq, kinds=(kind,)).best
            return h.axis.direction, h.axis.origin, h.magnitudes
        rng = substream(cfg.seed, "restarts", r)
        d = normalize(rng.normal(size=3))
        axis = MotionAxis(kind, d, centroid)
        return d, centroid.copy(), initial_magnitudes(seq, axis)

    def run(r):
        d, o, m = starts(r)
        return _descend(obj, np.asarray(d, float), np.asarray(o, float), m, cfg, r)

    results = ordered_map(run, range(cfg.restarts))
    full = obj if cfg.query_points is None else ChamferObjective(seq, kind)
    finals = [full.frame_values(d, o, m) for d, o, m, _ in results]
    totals = [float(f.sum()) for f in finals]
    best_r = min(range(len(results)), key=lambda r: (totals[r], r))
    d, o, mags, trace = results[best_r]
    if kind is MotionKind.PRISMATIC:
        o = centroid
    axis, mags = _canonical(MotionAxis(kind, d, o), np.asarray(mags))
    hyp = Hypothesis(axis=axis, magnitudes=mags, residual=totals[best_r],
                     frame_residuals=finals[best_r])
    trace.final = hyp
    trace.restart_losses = totals
    return hyp, trace


def refine(seq, axis, magnitudes, cfg=OptimizerConfig()):
    """Single descent starting from a given joint and per-frame magnitudes.

    Returns ``(Hypothesis, OptTrace)`` like :func:`optimize` with one
    restart; the residual is computed on the full clouds.
    """
    kind = axis.kind
    obj = ChamferObjective(seq, kind, cfg.query_points)
    d, o, m, trace = _descend(obj, axis.direction.copy(), axis.origin.copy(),
                              np.asarray(magnitudes, float), cfg, 0)
    full = obj if cfg.query_points is None else ChamferObjective(seq, kind)
    fr = full.frame_values(d, o, m)
    if kind is MotionKind.PRISMATIC:
        o = obj.centroid
    out_axis, mags = _canonical(MotionAxis(kind, d, o), m)
    hyp = Hypothesis(axis=out_axis, magnitudes=mags, residual=float(fr.sum()),
                     frame_residuals=fr)
    trace.final = hyp
    trace.restart_losses = [hyp.residual]
    return hyp, trace
