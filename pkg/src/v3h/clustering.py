"""Hard labels from spectral embeddings."""

from __future__ import annotations

import numpy as np

N_RESTARTS = 10
MAX_LLOYD = 300
CENTROID_TOL = 1e-9


def _wcss(X, centres, labels):
    return float(np.sum((X - centres[labels]) ** 2))


def _sq_dists(X, centres):
    d = (np.sum(X * X, axis=1)[:, None] - 2.0 * X @ centres.T
         + np.sum(centres * centres, axis=1)[None, :])
    return np.maximum(d, 0.0)


def _plusplus(X, k, rng):
    n = X.shape[0]
    centres = np.empty((k, X.shape[1]))
    centres[0] = X[rng.integers(n)]
    closest = np.sum((X - centres[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centres[j] = X[idx]
        closest = np.minimum(closest, np.sum((X - centres[j]) ** 2, axis=1))
    return centres


def lloyd(X, centres, max_iter=MAX_LLOYD, tol=CENTROID_TOL, history=None):
    """Lloyd iterations from the given centres.

    Empty clusters are refilled with the point farthest from its centre.
    If ``history`` is a list, the WCSS after every assignment step is
    appended to it.
    """
    X = np.asarray(X, dtype=float)
    centres = np.array(centres, dtype=float)
    k = centres.shape[0]
    labels = np.argmin(_sq_dists(X, centres), axis=1)
    for _ in range(max_iter):
        if history is not None:
            history.append(_wcss(X, centres, labels))
        new = centres.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new[j] = X[members].mean(axis=0)
        empty = [j for j in range(k) if not np.any(labels == j)]
        if empty:
            far = np.argsort(-np.sum((X - new[labels]) ** 2, axis=1))
            taken = set()
            for j, i in zip(empty, (i for i in far if i not in taken)):
                new[j] = X[i]
                labels[i] = j
                taken.add(i)
        shift = np.max(np.abs(new - centres))
        centres = new
        labels = np.argmin(_sq_dists(X, centres), axis=1)
        if shift < tol:
            break
    if history is not None:
        history.append(_wcss(X, centres, labels))
    return labels, centres


def kmeans(points, c: int, restarts: int = N_RESTARTS, seed=None, return_wcss=False):
    """k-means with k-means++ seeding; keeps the best of ``restarts`` runs.

    Parameters
    ----------
    points : ndarray, shape (n, d)
        One point per row.
    c : int
        Number of clusters, ``1 <= c <= n``.
    restarts : int
        Independent seedings; the lowest within-cluster sum of squares wins.
    seed : int or None
        Seed for the generator driving all restarts.

    Returns
    -------
    labels : ndarray of int, shape (n,)
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"need 1 <= c <= n, got c={c}, n={n}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, centres = lloyd(X, _plusplus(X, c, rng))
        score = _wcss(X, centres, labels)
        if best is None or score < best[0] - 1e-12:
            best = (score, labels)
    labels = _canonical(best[1])
    if return_wcss:
        return labels, best[0]
    return labels


def _canonical(labels):
    # relabel in order of first appearance so equal partitions give equal vectors
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(order.size, dtype=int)
    remap[np.unique(labels)[order]] = np.arange(order.size)
    return remap[labels]


def normalize_rows(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    norms = np.linalg.norm(H, axis=1, keepdims=True)
    return np.divide(H, norms, out=np.zeros_like(H), where=norms > 0)


def labels_from_H(H, c: int, seed=None, restarts: int = N_RESTARTS) -> np.ndarray:
    """Row-normalize an ``n x c`` indicator matrix and cluster its rows."""
    return kmeans(normalize_rows(H), c, restarts=restarts, seed=seed)
