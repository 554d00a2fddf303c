"""Clustering accuracy, normalized mutual information and purity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class MetricRecord:
    acc: float
    nmi: float
    purity: float


def _check(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} labels")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """Counts ``table[i, j]`` of samples in predicted cluster ``i`` and class ``j``."""
    pred, truth = _check(pred, truth)
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    table = np.zeros((p.max() + 1 if p.size else 0, t.max() + 1 if t.size else 0), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    return table


def hungarian(cost):
    """Minimum-cost perfect matching on a square cost matrix.

    Returns ``(perm, total)`` with ``perm[i]`` the column assigned to row ``i``.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost must be square, got {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=int)
    perm[rows] = cols
    return perm, float(cost[rows, cols].sum())


def accuracy(pred, truth) -> float:
    table = contingency(pred, truth)
    k = max(table.shape)
    padded = np.zeros((k, k))
    padded[: table.shape[0], : table.shape[1]] = table
    _, total = hungarian(-padded)
    return -total / table.sum()


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies."""
    table = contingency(pred, truth).astype(float)
    n = table.sum()
    h_pred = _entropy(table.sum(axis=1), n)
    h_true = _entropy(table.sum(axis=0), n)
    if h_pred == 0.0 and h_true == 0.0:
        return 1.0
    if h_pred == 0.0 or h_true == 0.0:
        return 0.0
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / n ** 2
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    return float(np.clip(mi / np.sqrt(h_pred * h_true), 0.0, 1.0))


def purity(pred, truth) -> float:
    table = contingency(pred, truth)
    return float(table.max(axis=1).sum() / table.sum())


def evaluate(pred, truth) -> MetricRecord:
    return MetricRecord(acc=accuracy(pred, truth), nmi=nmi(pred, truth),
                        purity=purity(pred, truth))
