"""Static exports for inspecting results in external viewers.

* :func:`export_overlay` writes the rest cloud and axis polylines as one
  colored PLY.
* :func:`export_trace` writes an optimizer loss history as CSV.
"""

import csv

import numpy as np

from .geometry import DYNAMIC
from .io import read_ply, write_ply

GRAY = (128, 128, 128)
BLUE = (0, 0, 255)
RED = (255, 0, 0)
GREEN = (0, 255, 0)
AXIS_SAMPLES = 64
AXIS_HALF_LENGTH = 0.6  # fraction of the rest diagonal


def axis_polyline(axis, diagonal, n=AXIS_SAMPLES, half_length=AXIS_HALF_LENGTH):
    """``n`` points along the axis line, centered on its origin."""
    s = np.linspace(-half_length * diagonal, half_length * diagonal, n)
    return axis.origin + s[:, None] * axis.direction


def export_overlay(seq, pred, gt=None, path="overlay.ply", binary=True):
    """Write the rest cloud with predicted (and true) axis samples.

    Static points are gray, dynamic points blue, predicted-axis samples red
    and ground-truth samples green.  Output depends only on the inputs.
    """
    rest = seq.rest
    diag = rest.diagonal
    colors = np.where((rest.labels == DYNAMIC)[:, None], BLUE, GRAY)
    parts = [rest.points, axis_polyline(pred, diag)]
    cols = [colors, np.tile(RED, (AXIS_SAMPLES, 1))]
    if gt is not None:
        parts.append(axis_polyline(gt, diag))
        cols.append(np.tile(GREEN, (AXIS_SAMPLES, 1)))
    write_ply(path, np.concatenate(parts), colors=np.concatenate(cols).astype(np.uint8),
              binary=binary)
    return path


def read_overlay(path):
    """Split an overlay file by color.

    Returns
    -------
    dict
        ``"static"``, ``"dynamic"``, ``"pred"`` and ``"gt"`` point arrays.
    """
    cloud, colors = read_ply(path, with_colors=True)
    out = {}
    for key, c in (("static", GRAY), ("dynamic", BLUE), ("pred", RED), ("gt", GREEN)):
        out[key] = cloud.points[np.all(colors == c, axis=1)]
    return out


def polyline_direction(points):
    """Unit direction of a sampled straight polyline (first to last)."""
    v = points[-1] - points[0]
    return v / np.linalg.norm(v)


def export_trace(trace, path):
    """Write ``iteration,loss`` rows, one per recorded loss."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "loss"])
        for i, loss in enumerate(trace.losses):
            w.writerow([i, repr(float(loss))])
    return path


def read_trace(path):
    """Losses from a file written by :func:`export_trace`."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["loss"]) for r in rows])
