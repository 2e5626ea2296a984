"""Pixel-level scoring of defect masks: confusion counts, P/R/F and ROC sweeps."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .image import BlockGrid


@dataclass(frozen=True)
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class CurvePoint:
    threshold: int
    tpr: float
    fpr: float
    precision: float
    recall: float


@dataclass
class MetricsReport:
    confusion: Confusion
    precision: float
    recall: float
    f_measure: float
    roc: list = field(default_factory=list)
    auc: float = float("nan")

    def row(self, name: str = "") -> dict:
        c = self.confusion
        return {
            "image": name, "tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn,
            "precision": self.precision, "recall": self.recall,
            "f_measure": self.f_measure, "auc": self.auc,
        }


def _ratio(num, den) -> float:
    # 0/0 is reported as 0 so CSV columns stay numeric
    return float(num) / float(den) if den else 0.0


def _check_pair(a, b):
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shape {a.shape} does not match truth shape {b.shape}")
    return a, b


def confusion(mask, truth) -> Confusion:
    """Pixelwise counts with True (white) as the positive class."""
    m, t = _check_pair(mask, truth)
    tp = int(np.count_nonzero(m & t))
    fp = int(np.count_nonzero(m & ~t))
    fn = int(np.count_nonzero(~m & t))
    return Confusion(tp=tp, tn=int(m.size) - tp - fp - fn, fp=fp, fn=fn)


def precision_recall_f(c: Confusion) -> tuple[float, float, float]:
    p = _ratio(c.tp, c.tp + c.fp)
    r = _ratio(c.tp, c.tp + c.fn)
    return p, r, _ratio(2 * p * r, p + r)


def sweep_curves(gray, grid: BlockGrid, truth) -> tuple[list[CurvePoint], float]:
    """ROC/PR points for ``G > t`` at every t in 0..255, plus the ROC AUC.

    Only block-level counting is needed: each block contributes its number
    of positive and negative truth pixels to every threshold it exceeds.
    The AUC integrates the points together with the (0,0) and (1,1) corners
    by the trapezoid rule after sorting by fpr.
    """
    gray = np.asarray(gray).astype(np.int64)
    truth = np.asarray(truth).astype(bool)
    if gray.shape != grid.shape:
        raise ValueError(f"gray map shape {gray.shape} does not match grid {grid.shape}")
    if truth.shape != grid.pixel_shape:
        raise ValueError(f"truth shape {truth.shape} does not match mask shape {grid.pixel_shape}")
    idx = grid.pixel_block_index().ravel()
    pos_blk = np.bincount(idx, weights=truth.ravel(), minlength=grid.K)
    all_blk = np.bincount(idx, minlength=grid.K).astype(np.float64)
    neg_blk = all_blk - pos_blk
    levels = np.clip(gray.ravel(), 0, 255)
    pos_at = np.bincount(levels, weights=pos_blk, minlength=256)
    neg_at = np.bincount(levels, weights=neg_blk, minlength=256)
    # counts strictly above t
    tp = pos_at[::-1].cumsum()[::-1] - pos_at
    fp = neg_at[::-1].cumsum()[::-1] - neg_at
    n_pos, n_neg = pos_at.sum(), neg_at.sum()
    points = []
    for t in range(256):
        tpr = _ratio(tp[t], n_pos)
        points.append(CurvePoint(
            threshold=t, tpr=tpr, fpr=_ratio(fp[t], n_neg),
            precision=_ratio(tp[t], tp[t] + fp[t]), recall=tpr,
        ))
    xy = sorted({(0.0, 0.0), (1.0, 1.0)} | {(p.fpr, p.tpr) for p in points})
    x, y = np.array(xy).T
    auc = float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))
    return points, auc


def evaluate(mask, truth, gray=None, grid: BlockGrid | None = None) -> MetricsReport:
    """Score a mask; with ``gray`` and ``grid`` the ROC sweep and AUC are added."""
    c = confusion(mask, truth)
    p, r, f = precision_recall_f(c)
    report = MetricsReport(c, p, r, f)
    if gray is not None and grid is not None:
        report.roc, report.auc = sweep_curves(gray, grid, truth)
    return report


def iou(mask, truth) -> float:
    m, t = _check_pair(mask, truth)
    return _ratio(np.count_nonzero(m & t), np.count_nonzero(m | t))


REPORT_FIELDS = ["image", "tp", "tn", "fp", "fn", "precision", "recall", "f_measure", "auc"]


def summary_row(reports: list[MetricsReport]) -> dict:
    """Mean precision, recall, F and AUC; counts are summed."""
    row = {"image": "mean"}
    for k in ("tp", "tn", "fp", "fn"):
        row[k] = sum(getattr(r.confusion, k) for r in reports)
    for k in ("precision", "recall", "f_measure", "auc"):
        vals = [getattr(r, k) for r in reports]
        row[k] = float(np.mean(vals)) if vals else 0.0
    return row


def _fmt(v):
    return f"{v:.6f}" if isinstance(v, float) else v


def write_report_csv(path, named_reports, summary: bool = True):
    """One row per (name, report) pair, then an optional mean row."""
    named_reports = list(named_reports)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, lineterminator="\n")
        w.writeheader()
        for name, rep in named_reports:
            w.writerow({k: _fmt(v) for k, v in rep.row(name).items()})
        if summary:
            w.writerow({k: _fmt(v) for k, v in summary_row([r for _, r in named_reports]).items()})


def write_roc_csv(path, points: list[CurvePoint]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "tpr", "fpr", "precision", "recall"])
        for p in points:
            w.writerow([p.threshold, f"{p.tpr:.6f}", f"{p.fpr:.6f}",
                        f"{p.precision:.6f}", f"{p.recall:.6f}"])
