"""Binary classification metrics over per-point labels."""

from __future__ import annotations

import numpy as np


def _binary(a, name: str) -> np.ndarray:
    v = np.asarray(a).reshape(-1)
    if v.dtype == bool:
        return v
    if np.any((v != 0) & (v != 1)):
        raise ValueError(f"{name} labels must be binary")
    return v.astype(bool)


def confusion(pred, true) -> tuple[int, int, int, int]:
    """(TP, FP, FN, TN) counts."""
    p, t = _binary(pred, "predicted"), _binary(true, "true")
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} predicted vs {t.size} true labels")
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    return tp, fp, fn, p.size - tp - fp - fn


def f1_score(pred, true) -> float:
    """2TP / (2TP + FP + FN); 0 when nothing is positive on either side."""
    tp, fp, fn, _ = confusion(pred, true)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0
