import math

import numpy as np
import pytest

from artic.chamfer import build_tree, nearest_sq
from artic.errors import ArticError
from artic.geometry import MotionAxis, MotionKind, ObservedSequence, apply_motion
from artic.metrics import angular_error, line_distance
from artic.obb import enumerate_candidates, fit_obb
from artic.search import EXACT, TIE_TOL, SearchConfig, fit_magnitude, search


@pytest.fixture(scope="module")
def door_report(door):
    _, seq, _ = door
    return search(seq)


def test_fit_magnitude_identity(door):
    _, seq, gt = door
    rest = seq.rest_dynamic
    m, res = fit_magnitude(rest, rest, gt)
    assert abs(m) <= 1e-3 and res < 1e-20


def test_fit_magnitude_rotation(door):
    _, seq, gt = door
    rest = seq.rest_dynamic
    frame = apply_motion(rest, gt, math.radians(30))
    m, res = fit_magnitude(rest, frame, gt)
    assert math.degrees(m) == pytest.approx(30, abs=0.1)
    assert res <= 1e-6


def test_fit_magnitude_prismatic(drawer):
    _, seq, gt = drawer
    rest = seq.rest_dynamic
    D = rest.diagonal
    m, res = fit_magnitude(rest, apply_motion(rest, gt, 0.3 * D), gt)
    assert m == pytest.approx(0.3 * D, abs=1e-3 * D)
    assert res <= 1e-6 * D * D


def test_door_recovery(door, door_report):
    _, seq, gt = door
    best = door_report.best
    assert best.axis.kind is MotionKind.REVOLUTE
    assert angular_error(best.axis, gt) <= 0.5
    diag = seq.diagonal
    assert line_distance(best.axis.origin, best.axis.direction,
                         gt.origin, gt.direction) <= 0.01 * diag
    assert np.linalg.norm(best.axis.origin - gt.origin) <= 0.01 * diag
    assert best.residual <= 1e-6 * diag ** 2


def test_exhaustive_and_ranked(door_report):
    ranked = door_report.ranked
    assert len(ranked) == 84 and ranked[0] is door_report.best
    res = [h.residual for h in ranked]
    # equal residuals (within the 1e-12 tie window) keep candidate order
    assert all(a <= b + TIE_TOL for a, b in zip(res, res[1:]))
    seen = {h.candidate for h in ranked}
    assert seen == {(o, d, k) for o in range(7) for d in range(6) for k in MotionKind}
    for h in ranked:
        assert len(h.magnitudes) == 10
        assert h.residual == pytest.approx(h.frame_residuals.sum(), rel=1e-12)


def test_residual_matches_brute_transform(door, door_report):
    _, seq, _ = door
    h = door_report.ranked[5]
    total = 0.0
    for fr, m in zip(seq.frames, h.magnitudes):
        moved = apply_motion(seq.rest_dynamic, h.axis, m).points
        a, _ = nearest_sq(build_tree(fr.points), moved)
        b, _ = nearest_sq(build_tree(moved), fr.points)
        total += a.mean() + b.mean()
    assert h.residual == pytest.approx(total, rel=1e-9)


def test_single_kind(door):
    _, seq, _ = door
    rep = search(seq, kinds=[MotionKind.PRISMATIC])
    assert len(rep.ranked) == 42
    assert all(h.axis.kind is MotionKind.PRISMATIC for h in rep.ranked)
    with pytest.raises(ArticError):
        search(seq, kinds=[])


def test_zero_motion_tie_break(door):
    _, seq, _ = door
    rest = seq.rest_dynamic
    still = ObservedSequence(seq.rest, [rest] * 3)
    rep = search(still)
    assert rep.best.candidate == (0, 0, MotionKind.REVOLUTE)
    assert all(h.residual < 1e-20 for h in rep.ranked)
    np.testing.assert_array_equal(rep.best.magnitudes, 0.0)


def test_candidate_oracle(door):
    # frames made by one specific candidate joint are recovered exactly
    _, seq, _ = door
    rest = seq.rest_dynamic
    cands = enumerate_candidates(fit_obb(rest))
    axis = MotionAxis(MotionKind.REVOLUTE, cands.directions[5], cands.origins[3])
    frames = [apply_motion(rest, axis, a) for a in np.radians([10, 25, 40])]
    rep = search(ObservedSequence(seq.rest, frames))
    best = rep.best
    assert angular_error(best.axis, axis) < 1e-6
    np.testing.assert_allclose(best.axis.origin, axis.origin, atol=1e-12)
    assert best.residual <= 1e-6 * seq.diagonal ** 2


def test_deterministic(door, door_report):
    _, seq, _ = door
    again = search(seq)
    for a, b in zip(door_report.ranked, again.ranked):
        assert a.candidate == b.candidate and a.residual == b.residual
        np.testing.assert_array_equal(a.magnitudes, b.magnitudes)


def test_argmin_stable_under_unsquared_chamfer(door, door_report):
    _, seq, _ = door

    def unsquared(h):
        total = 0.0
        for fr, m in zip(seq.frames, h.magnitudes):
            moved = apply_motion(seq.rest_dynamic, h.axis, m).points
            a, _ = nearest_sq(build_tree(fr.points), moved)
            b, _ = nearest_sq(build_tree(moved), fr.points)
            total += np.sqrt(a).mean() + np.sqrt(b).mean()
        return total

    scores = [unsquared(h) for h in door_report.ranked[:12]]
    assert int(np.argmin(scores)) == 0


def test_exact_config_agrees(door):
    _, seq, gt = door
    rep = search(seq, kinds=[MotionKind.REVOLUTE], config=EXACT)
    assert angular_error(rep.best.axis, gt) <= 0.5
    assert SearchConfig().to_dict()["grid_size"] == 64
