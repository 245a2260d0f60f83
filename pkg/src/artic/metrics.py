"""Joint accuracy metrics and the method-comparison harness.

* Angular error: angle between predicted and true axis directions, folded
  to [0, 90] degrees because a joint direction and its negation describe
  the same axis line.
* Position error: distance between predicted and true joint origins.  The
  origin can slide along a revolute axis without changing the motion, so
  the distance between the two axis lines is reported alongside it.
"""

import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .direct import OptimizerConfig, optimize
from .errors import ArticError, KindMismatchError
from .geometry import MotionKind, check_unit
from .runtime import ordered_map
from .search import SearchConfig, search

METHODS = ("algo", "direct")
MAE_CONVENTION = "arccos(|d_pred . d_gt|) in degrees, folded to [0, 90]"
MPE_CONVENTION = "|o_pred - o_gt| / object diagonal; line distance reported too"


def angular_error(pred, gt, folded=True):
    """Angle in degrees between the directions of two axes.

    Parameters
    ----------
    pred, gt : MotionAxis or array_like
    folded : bool
        Use ``|cos|`` so opposite directions count as identical.
    """
    a = check_unit(getattr(pred, "direction", pred), "pred direction")
    b = check_unit(getattr(gt, "direction", gt), "gt direction")
    c = float(a @ b)
    if folded:
        c = abs(c)
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


@dataclass(frozen=True)
class PositionError:
    primary: float
    line_distance: float
    identifiable: bool


def line_distance(o1, d1, o2, d2):
    """Shortest distance between the lines ``o1 + s d1`` and ``o2 + t d2``."""
    w = np.asarray(o2, float) - np.asarray(o1, float)
    n = np.cross(d1, d2)
    nn = float(np.linalg.norm(n))
    if nn < 1e-12:
        return float(np.linalg.norm(np.cross(w, d1)))
    return abs(float(w @ n)) / nn


def position_error(pred, gt):
    """Origin distance plus axis-line distance.

    For prismatic joints the origin carries no information and the result
    is flagged ``identifiable=False``.
    """
    if MotionKind(pred.kind) is not MotionKind(gt.kind):
        raise KindMismatchError(
            f"cannot compare a {pred.kind.value} axis with a {gt.kind.value} axis"
        )
    primary = float(np.linalg.norm(pred.origin - gt.origin))
    ld = line_distance(pred.origin, pred.direction, gt.origin, gt.direction)
    return PositionError(primary=primary, line_distance=ld,
                         identifiable=pred.kind is MotionKind.REVOLUTE)


@dataclass
class MetricRow:
    object_id: str
    method: str
    kind_gt: str
    kind_pred: str | None = None
    mae_deg: float | None = None
    mae_unfolded_deg: float | None = None
    mpe: float | None = None
    line_distance: float | None = None
    mpe_identifiable: bool | None = None
    residual: float | None = None
    runtime_s: float | None = None
    error: str | None = None

    FIELDS = ("object_id", "method", "kind_gt", "kind_pred", "mae_deg",
              "mae_unfolded_deg", "mpe", "line_distance", "mpe_identifiable",
              "residual", "runtime_s", "error")

    @property
    def ok(self):
        return self.error is None

    def to_dict(self):
        return {k: getattr(self, k) for k in self.FIELDS}


@dataclass(frozen=True)
class BenchmarkConfig:
    """``kind`` is ``"gt"`` (each method is told the true motion kind) or
    ``"auto"`` (each method also chooses the kind by residual)."""

    kind: str = "gt"
    search: SearchConfig = field(default_factory=SearchConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def to_dict(self):
        return {"kind": self.kind, "search": self.search.to_dict(),
                "optimizer": self.optimizer.to_dict()}


@dataclass
class BenchmarkResult:
    rows: list
    means: dict
    config: dict


def estimate(seq, method, kinds, cfg):
    """Run one method; returns the best Hypothesis (and extra info)."""
    if method == "algo":
        rep = search(seq, kinds=kinds, config=cfg.search)
        return rep.best, rep
    if method == "direct":
        best, extra = None, None
        for kind in kinds:
            hyp, trace = optimize(seq, kind, cfg.optimizer)
            if best is None or hyp.residual < best.residual:
                best, extra = hyp, trace
        return best, extra
    raise ArticError(f"unknown method {method!r}; expected one of {METHODS}")


def evaluate(object_id, seq, gt, method, cfg, diagonal=1.0, timings=True):
    """Score one method on one object; failures become rows with ``error``."""
    kinds = ((gt.kind,) if cfg.kind == "gt"
             else (MotionKind.REVOLUTE, MotionKind.PRISMATIC))
    row = MetricRow(object_id=object_id, method=method, kind_gt=gt.kind.value)
    start = time.perf_counter()
    try:
        hyp, _ = estimate(seq, method, kinds, cfg)
    except ArticError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    if timings:
        row.runtime_s = time.perf_counter() - start
    pred = hyp.axis
    row.kind_pred = pred.kind.value
    row.residual = float(hyp.residual)
    row.mae_deg = angular_error(pred, gt)
    row.mae_unfolded_deg = angular_error(pred, gt, folded=False)
    if pred.kind is gt.kind:
        pe = position_error(pred, gt)
        row.mpe = pe.primary / diagonal
        row.line_distance = pe.line_distance / diagonal
        row.mpe_identifiable = pe.identifiable
    else:
        row.error = "KindMismatchError: predicted kind differs from ground truth"
    return row


def aggregate(rows):
    """Per-method means over successful rows."""
    means = {}
    for method in sorted({r.method for r in rows}):
        sel = [r for r in rows if r.method == method]
        ok = [r for r in sel if r.ok]
        entry = {"n": len(ok), "failures": len(sel) - len(ok)}
        for key in ("mae_deg", "mpe", "line_distance", "residual"):
            vals = [getattr(r, key) for r in ok]
            entry[key] = float(np.mean(vals)) if vals else None
        means[method] = entry
    return means


def run_benchmark(suite, methods=METHODS, cfg=BenchmarkConfig(), timings=True):
    """Run every method on every suite item.

    Parameters
    ----------
    suite : sequence
        Items with ``object_id``, ``seq`` and ``gt`` attributes (and an
        optional ``diagonal``), or ``(seq, gt)`` tuples.
    methods : iterable of {"algo", "direct"}
    cfg : BenchmarkConfig

    Returns
    -------
    BenchmarkResult
        Rows sorted by ``(object_id, method)`` and per-method means over
        the rows that did not fail.
    """
    methods = sorted(set(methods), key=lambda m: (m not in METHODS, m))
    if not methods:
        raise ArticError("no methods requested")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ArticError(f"unknown methods {bad}; expected {METHODS}")
    items = []
    for i, item in enumerate(suite):
        if isinstance(item, tuple):
            seq, gt = item
            items.append((f"obj-{i:03d}", seq, gt, 1.0))
        else:
            items.append((item.object_id, item.seq, item.gt,
                          float(getattr(item, "diagonal", 1.0))))
    if not items:
        raise ArticError("empty suite")
    jobs = [(it, m) for it in items for m in methods]
    rows = ordered_map(
        lambda job: evaluate(job[0][0], job[0][1], job[0][2], job[1], cfg,
                             diagonal=job[0][3], timings=timings),
        jobs,
    )
    rows.sort(key=lambda r: (r.object_id, r.method))
    return BenchmarkResult(rows=rows, means=aggregate(rows), config=cfg.to_dict())
