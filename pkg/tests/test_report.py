import math

import numpy as np
import pytest

from artic.direct import OptimizerConfig, OptTrace, refine
from artic.geometry import MotionAxis, rotation_matrix
from artic.io import read_ply
from artic.report import (AXIS_SAMPLES, export_overlay, export_trace,
                          polyline_direction, read_overlay, read_trace)
from artic.metrics import angular_error


def test_overlay_identity(tmp_path, door):
    _, seq, gt = door
    p = export_overlay(seq, gt, gt, tmp_path / "o.ply")
    parts = read_overlay(p)
    assert len(parts["pred"]) == len(parts["gt"]) == AXIS_SAMPLES
    np.testing.assert_allclose(parts["pred"], parts["gt"], atol=1e-9)
    assert len(parts["static"]) + len(parts["dynamic"]) == len(seq.rest)
    span = np.linalg.norm(parts["pred"][-1] - parts["pred"][0])
    assert span == pytest.approx(1.2 * seq.diagonal, rel=1e-12)


def test_overlay_angle_remeasured(tmp_path, door):
    _, seq, gt = door
    # rotate the true direction by 30 degrees about a perpendicular axis
    perp = np.cross(gt.direction, [1.0, 0, 0])
    perp /= np.linalg.norm(perp)
    d = rotation_matrix(perp, math.radians(30)) @ gt.direction
    pred = MotionAxis(gt.kind, d / np.linalg.norm(d), gt.origin)
    parts = read_overlay(export_overlay(seq, pred, gt, tmp_path / "o.ply"))
    angle = angular_error(polyline_direction(parts["pred"]), polyline_direction(parts["gt"]))
    assert angle == pytest.approx(30, abs=0.1)


def test_overlay_without_gt_and_pure(tmp_path, door):
    _, seq, gt = door
    a = export_overlay(seq, gt, None, tmp_path / "a.ply")
    b = export_overlay(seq, gt, None, tmp_path / "b.ply")
    assert len(read_overlay(a)["gt"]) == 0
    assert a.read_bytes() == b.read_bytes()
    cloud, colors = read_ply(a, with_colors=True)
    assert colors.dtype == np.uint8 and len(cloud) == len(seq.rest) + AXIS_SAMPLES


def test_trace_roundtrip(tmp_path):
    one = OptTrace(losses=[0.5])
    p = export_trace(one, tmp_path / "t.csv")
    assert p.read_text().splitlines() == ["iteration,loss", "0,0.5"]
    tr = OptTrace(losses=list(np.geomspace(1, 1e-9, 37) * np.pi))
    export_trace(tr, p)
    np.testing.assert_allclose(read_trace(p), tr.losses, rtol=1e-12, atol=0)


def test_trace_final_matches_residual(tmp_path, door):
    tpl, seq, gt = door
    start = MotionAxis(gt.kind, gt.direction, gt.origin + [0.01, 0.0, 0.0])
    hyp, trace = refine(seq, start, tpl.gt_profile, OptimizerConfig(query_points=None,
                                                                    max_iters=30))
    losses = read_trace(export_trace(trace, tmp_path / "t.csv"))
    assert losses[-1] == pytest.approx(hyp.residual, rel=1e-9)
    assert np.all(np.diff(losses) < 0)
