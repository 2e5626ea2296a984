import csv

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from ghogdefect.image import BlockGrid
from ghogdefect.metrics import (
    Confusion, confusion, evaluate, iou, precision_recall_f, sweep_curves, write_report_csv,
    write_roc_csv,
)
from ghogdefect.saliency import otsu_threshold, segment


def test_confusion_cases(rng):
    white = np.ones((10, 10), bool)
    assert confusion(white, white) == Confusion(100, 0, 0, 0)
    assert confusion(~white, white) == Confusion(0, 0, 0, 100)
    a, b = rng.random((10, 10)) > 0.5, rng.random((10, 10)) > 0.5
    tp = tn = fp = fn = 0
    for x, y in zip(a.ravel(), b.ravel()):
        tp += x and y
        tn += (not x) and (not y)
        fp += x and not y
        fn += (not x) and y
    assert confusion(a, b) == Confusion(tp, tn, fp, fn)
    with pytest.raises(ValueError):
        confusion(a, b[:5])


@pytest.mark.parametrize("c,want", [
    (Confusion(5, 0, 5, 0), (0.5, 1.0, 2 / 3)),
    (Confusion(0, 0, 0, 0), (0.0, 0.0, 0.0)),
    (Confusion(8, 0, 2, 8), (0.8, 0.5, 0.8 / 1.3)),
])
def test_precision_recall_f(c, want):
    assert precision_recall_f(c) == pytest.approx(want, abs=1e-15)


def test_perfect_separator():
    grid = BlockGrid(4, 6, 6)
    blocks = np.zeros((6, 6), bool)
    blocks[2:4, 1:5] = True
    pts, auc = sweep_curves(np.where(blocks, 255, 0), grid, grid.broadcast(blocks))
    assert auc == 1.0 and len(pts) == 256


def test_random_scorer_auc():
    rng = np.random.default_rng(2024)
    grid = BlockGrid(2, 32, 32)
    gray = rng.integers(0, 256, (32, 32))
    truth = grid.broadcast(rng.random((32, 32)) > 0.7)
    _, auc = sweep_curves(gray, grid, truth)
    assert 0.4 <= auc <= 0.6


def test_constant_scorer():
    grid = BlockGrid(2, 4, 4)
    truth = grid.broadcast(np.eye(4, dtype=bool))
    pts, auc = sweep_curves(np.full((4, 4), 77), grid, truth)
    assert auc == 0.5
    assert {(p.fpr, p.tpr) for p in pts} == {(0.0, 0.0), (1.0, 1.0)}


def test_curve_properties(rng):
    grid = BlockGrid(3, 10, 12)
    gray = rng.integers(0, 256, (10, 12))
    truth = rng.random(grid.pixel_shape) > 0.6
    pts, auc = sweep_curves(gray, grid, truth)
    assert (pts[255].fpr, pts[255].tpr) == (0.0, 0.0)
    fpr = np.array([p.fpr for p in pts])
    tpr = np.array([p.tpr for p in pts])
    assert np.all(np.diff(fpr) <= 0) and np.all(np.diff(tpr) <= 0)
    # AUC matches an independent rank-based computation over pixels
    assert auc == pytest.approx(roc_auc_score(truth.ravel(), grid.broadcast(gray).ravel()),
                                abs=1e-12)
    # strictly increasing relabelling: dense ranks of the gray levels
    ranks = np.unique(gray, return_inverse=True)[1].reshape(gray.shape)
    _, auc2 = sweep_curves(ranks, grid, truth)
    assert auc2 == pytest.approx(auc, abs=1e-12)


def test_sweep_matches_segment(rng):
    grid = BlockGrid(4, 8, 8)
    gray = rng.integers(0, 256, (8, 8))
    truth = rng.random(grid.pixel_shape) > 0.5
    t = otsu_threshold(gray)
    pts, _ = sweep_curves(gray, grid, truth)
    p, r, _ = precision_recall_f(confusion(segment(gray, grid).mask, truth))
    assert (pts[t].precision, pts[t].recall) == pytest.approx((p, r))


def test_sweep_shape_errors():
    grid = BlockGrid(2, 3, 3)
    with pytest.raises(ValueError):
        sweep_curves(np.zeros((3, 4)), grid, np.zeros((6, 6)))
    with pytest.raises(ValueError):
        sweep_curves(np.zeros((3, 3)), grid, np.zeros((6, 7)))


def test_iou():
    a = np.zeros((4, 4), bool)
    a[:2] = True
    b = np.zeros((4, 4), bool)
    b[1:3] = True
    assert iou(a, b) == pytest.approx(4 / 12)
    assert iou(np.zeros((2, 2)), np.zeros((2, 2))) == 0.0


def test_csv_outputs(tmp_path, rng):
    grid = BlockGrid(2, 4, 4)
    truth = rng.random(grid.pixel_shape) > 0.5
    gray = rng.integers(0, 256, (4, 4))
    reps = [("a", evaluate(grid.broadcast(gray > 128), truth, gray, grid)),
            ("b", evaluate(truth, truth, gray, grid))]
    write_report_csv(tmp_path / "m.csv", reps)
    rows = list(csv.DictReader(open(tmp_path / "m.csv")))
    assert [r["image"] for r in rows] == ["a", "b", "mean"]
    assert float(rows[1]["f_measure"]) == 1.0
    mean_f = (reps[0][1].f_measure + 1.0) / 2
    assert float(rows[2]["f_measure"]) == pytest.approx(mean_f, abs=1e-6)
    write_roc_csv(tmp_path / "r.csv", reps[0][1].roc)
    assert len(open(tmp_path / "r.csv").read().splitlines()) == 257
