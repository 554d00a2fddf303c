"""Concatenation baselines: k-means (CK) and spectral clustering (CS)."""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist, squareform

from .clustering import N_RESTARTS, kmeans, labels_from_H
from .dataset import IncompleteDataset, MultiViewDataset
from .graph import laplacian


def mean_impute(data: IncompleteDataset) -> MultiViewDataset:
    """Fill every missing sample with the mean of its view's presented samples."""
    views = []
    for x, w in zip(data.views, data.index):
        full = np.repeat(x.mean(axis=1, keepdims=True), data.n, axis=1)
        full[:, w.rows] = x
        views.append(full)
    return MultiViewDataset(views=views, c=data.c, labels=data.labels)


def standardize(x: np.ndarray) -> np.ndarray:
    """Z-score each feature row; rows with zero variance are dropped."""
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    keep = sd[:, 0] > 0
    return (x[keep] - mu[keep]) / sd[keep]


def concatenate(data: IncompleteDataset) -> np.ndarray:
    """Imputed, standardized and stacked features, shape ``(sum d_v, n)``."""
    full = mean_impute(data)
    return np.vstack([standardize(x) for x in full.views])


def concat_kmeans(data: IncompleteDataset, seed=None) -> np.ndarray:
    X = concatenate(data)
    return kmeans(X.T, data.c, restarts=N_RESTARTS, seed=seed)


def gaussian_affinity(X: np.ndarray) -> np.ndarray:
    """``exp(-d^2 / (2 s^2))`` over sample columns, ``s`` the median distance."""
    d = pdist(X.T)
    sigma = float(np.median(d)) if d.size else 1.0
    if sigma <= 0:
        sigma = 1.0
    return np.exp(-squareform(d) ** 2 / (2.0 * sigma ** 2))


def concat_spectral(data: IncompleteDataset, seed=None) -> np.ndarray:
    S = gaussian_affinity(concatenate(data))
    L = laplacian(S).L
    _, vecs = linalg.eigh(L, subset_by_index=[0, data.c - 1])
    return labels_from_H(vecs, data.c, seed=seed)
