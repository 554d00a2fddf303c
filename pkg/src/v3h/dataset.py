"""Complete and incomplete multi-view datasets.

Views are stored feature-major: every view is a ``d_v x n`` (or
``d_v x m_v``) array whose columns are samples. CSV files on disk use the
usual samples-as-rows layout and are transposed on the way in and out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MASK_RETRY_BUDGET = 100


class DatasetError(ValueError):
    """Raised for malformed or inconsistent datasets."""


def _as_labels(labels, n, c):
    if labels is None:
        return None
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != n:
        raise DatasetError(f"labels must have length n={n}, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise DatasetError("labels must be integers")
        y = y.astype(int)
    if y.min() < 0 or y.max() >= c:
        raise DatasetError(f"labels must lie in [0, {c})")
    if np.unique(y).size != c:
        raise DatasetError(f"labels must use each of the {c} clusters at least once")
    return y


def _as_view(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DatasetError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DatasetError(f"{name} contains non-finite values")
    return a


@dataclass(frozen=True)
class MultiViewDataset:
    """Complete multi-view data.

    Attributes
    ----------
    views : list of ndarray
        ``views[v]`` has shape ``(d_v, n)``.
    c : int
        Number of clusters.
    labels : ndarray or None
        Ground-truth labels in ``[0, c)``.
    """

    views: list
    c: int
    labels: np.ndarray | None = None

    def __post_init__(self):
        views = [_as_view(x, f"view {v}") for v, x in enumerate(self.views)]
        if len(views) < 2:
            raise DatasetError("a multi-view dataset needs at least two views")
        n = views[0].shape[1]
        for v, x in enumerate(views):
            if x.shape[1] != n:
                raise DatasetError(
                    f"view {v} has {x.shape[1]} samples, expected {n}")
            if x.shape[0] < 1:
                raise DatasetError(f"view {v} has no features")
        if not 2 <= self.c <= n:
            raise DatasetError(f"cluster count must satisfy 2 <= c <= n, got c={self.c}, n={n}")
        for x in views:
            x.setflags(write=False)
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "labels", _as_labels(self.labels, n, self.c))

    @property
    def n(self) -> int:
        return self.views[0].shape[1]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [x.shape[0] for x in self.views]


@dataclass(frozen=True)
class IndexMatrix:
    """Selection matrix ``W`` of shape ``(m_v, n)``.

    Row ``i`` is the unit vector of the ``i``-th presented sample, so
    ``W @ W.T`` is the identity. Only the sorted row indices are stored.
    """

    rows: np.ndarray
    n: int

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.intp).ravel()
        if rows.size and (rows[0] < 0 or rows[-1] >= self.n):
            raise DatasetError(f"index rows must lie in [0, {self.n})")
        if np.any(np.diff(rows) <= 0):
            raise DatasetError("index rows must be strictly increasing")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return self.rows.size

    def matrix(self) -> np.ndarray:
        W = np.zeros((self.m, self.n))
        W[np.arange(self.m), self.rows] = 1.0
        return W

    def mask(self) -> np.ndarray:
        present = np.zeros(self.n, dtype=bool)
        present[self.rows] = True
        return present

    def embed(self, Z) -> np.ndarray:
        """``W.T @ Z @ W``: scatter an ``m x m`` matrix into ``n x n``."""
        out = np.zeros((self.n, self.n))
        out[np.ix_(self.rows, self.rows)] = Z
        return out

    def restrict(self, A) -> np.ndarray:
        """``W @ A @ W.T``: the presented-sample block of an ``n x n`` matrix."""
        return np.asarray(A)[np.ix_(self.rows, self.rows)]


def build_index_matrix(mask, n: int | None = None) -> IndexMatrix:
    """Index matrix of the samples marked present in ``mask``."""
    mask = np.asarray(mask, dtype=bool).ravel()
    if n is not None and mask.size != n:
        raise DatasetError(f"mask has length {mask.size}, expected {n}")
    if not mask.any():
        raise DatasetError("view has no presented samples")
    return IndexMatrix(rows=np.flatnonzero(mask), n=mask.size)


@dataclass(frozen=True)
class IncompleteDataset:
    """Per-view presented samples plus their index matrices."""

    views: list
    index: list
    c: int
    labels: np.ndarray | None = None
    per: float = 0.0

    def __post_init__(self):
        views = [_as_view(x, f"view {v}") for v, x in enumerate(self.views)]
        if len(views) != len(self.index):
            raise DatasetError("one index matrix per view is required")
        if len(views) < 2:
            raise DatasetError("a multi-view dataset needs at least two views")
        n = self.index[0].n
        covered = np.zeros(n, dtype=bool)
        for v, (x, w) in enumerate(zip(views, self.index)):
            if w.n != n:
                raise DatasetError("index matrices disagree on n")
            if x.shape[1] != w.m:
                raise DatasetError(
                    f"view {v} has {x.shape[1]} columns but its index lists {w.m} samples")
            covered[w.rows] = True
        if not covered.all():
            raise DatasetError(
                f"{int((~covered).sum())} samples are missing from every view")
        if not 2 <= self.c <= n:
            raise DatasetError(f"cluster count must satisfy 2 <= c <= n, got c={self.c}")
        for x in views:
            x.setflags(write=False)
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "index", list(self.index))
        object.__setattr__(self, "labels", _as_labels(self.labels, n, self.c))

    @property
    def n(self) -> int:
        return self.index[0].n

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [x.shape[0] for x in self.views]

    @property
    def sizes(self) -> list[int]:
        return [w.m for w in self.index]

    def masks(self) -> np.ndarray:
        """Presence masks stacked as an ``(n_views, n)`` boolean array."""
        return np.stack([w.mask() for w in self.index])


def complete(data: MultiViewDataset) -> IncompleteDataset:
    """Wrap a complete dataset with identity index matrices."""
    return apply_masks(data, np.ones((data.n_views, data.n), dtype=bool), per=0.0)


def apply_masks(data: MultiViewDataset, masks, per: float = 0.0) -> IncompleteDataset:
    masks = np.asarray(masks, dtype=bool)
    index = [build_index_matrix(m, data.n) for m in masks]
    views = [x[:, w.rows] for x, w in zip(data.views, index)]
    return IncompleteDataset(views=views, index=index, c=data.c,
                             labels=data.labels, per=per)


def _repair_coverage(masks, rng):
    n_views, n = masks.shape
    counts = masks.sum(axis=0)
    for i in np.flatnonzero(counts == 0):
        for v in rng.permutation(n_views):
            donors = np.flatnonzero(masks[v] & (counts >= 2))
            if donors.size:
                j = donors[rng.integers(donors.size)]
                masks[v, j] = False
                masks[v, i] = True
                counts[j] -= 1
                counts[i] += 1
                break
    return bool(np.all(counts >= 1))


def sample_masks(n: int, n_views: int, per: float, c: int, seed) -> np.ndarray:
    """Random presence masks with exactly ``round(per * n)`` deletions per view.

    Each view drops samples uniformly without replacement. Samples left
    uncovered by every view are swapped back in for a doubly covered sample
    of a randomly chosen view, which keeps the per-view counts fixed. If the
    swap cannot cover everything the whole pattern is redrawn, up to
    ``MASK_RETRY_BUDGET`` times.
    """
    if not 0.0 <= per <= 0.9:
        raise DatasetError(f"missing rate must lie in [0, 0.9], got {per}")
    n_del = int(round(per * n))
    keep = n - n_del
    if keep < c:
        raise DatasetError(
            f"missing rate {per} leaves {keep} samples per view, fewer than c={c}")
    if keep * n_views < n:
        raise DatasetError(
            f"missing rate {per} cannot cover {n} samples with {n_views} views")
    rng = np.random.default_rng(seed)
    for _ in range(MASK_RETRY_BUDGET):
        masks = np.ones((n_views, n), dtype=bool)
        for v in range(n_views):
            masks[v, rng.choice(n, size=n_del, replace=False)] = False
        if _repair_coverage(masks, rng):
            return masks
    raise DatasetError(
        f"could not draw a covering mask for per={per} after {MASK_RETRY_BUDGET} attempts")


def apply_missing(data: MultiViewDataset, per: float, seed=None) -> IncompleteDataset:
    """Delete ``round(per * n)`` random samples from every view."""
    masks = sample_masks(data.n, data.n_views, per, data.c, seed)
    return apply_masks(data, masks, per=per)


def generate_synthetic(n: int, c: int, dims, sep: float = 10.0, noise: float = 0.5,
                       seed=None) -> MultiViewDataset:
    """Gaussian blobs observed through several views.

    Every cluster gets, in every view, a centre drawn uniformly on the sphere
    of radius ``sep``; samples add isotropic Gaussian noise of standard
    deviation ``noise``. Cluster sizes differ by at most one and the sample
    order is shuffled.
    """
    dims = [int(d) for d in dims]
    if n < 5 * c:
        raise DatasetError(f"need n >= 5c, got n={n}, c={c}")
    if any(d < 2 for d in dims):
        raise DatasetError("every view needs at least two features")
    if not sep > 0 or noise < 0:
        raise DatasetError("sep must be positive and noise nonnegative")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % c)
    views = []
    for d in dims:
        centres = rng.standard_normal((d, c))
        centres *= sep / np.linalg.norm(centres, axis=0, keepdims=True)
        x = centres[:, labels] + noise * rng.standard_normal((d, n))
        views.append(x)
    return MultiViewDataset(views=views, c=c, labels=labels)


def _read_csv(path: Path) -> np.ndarray:
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    if not np.all(np.isfinite(a)):
        raise DatasetError(f"{path}: non-finite values are not allowed")
    return a


def _read_ints(path: Path) -> np.ndarray:
    text = path.read_text().split()
    try:
        return np.array([int(t) for t in text], dtype=int)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc


def load_dataset(manifest) -> MultiViewDataset | IncompleteDataset:
    """Load a dataset described by a JSON manifest.

    The manifest looks like::

        {"views": [{"path": "a.csv", "presence": "a.idx"}, {"path": "b.csv"}],
         "labels": "y.txt", "clusters": 3}

    Relative paths resolve against the manifest's directory. If any view
    has a presence file the result is an :class:`IncompleteDataset`; views
    without one are treated as complete.
    """
    manifest = Path(manifest)
    manifest_doc = json.loads(manifest.read_text())
    base = manifest.parent
    try:
        entries = manifest_doc["views"]
        c = int(manifest_doc["clusters"])
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"{manifest}: missing required key {exc}") from exc

    raw, presence = [], []
    for k, entry in enumerate(entries):
        path = base / entry["path"]
        raw.append(_read_csv(path).T)
        presence.append(_read_ints(base / entry["presence"]) if entry.get("presence") else None)

    labels = _read_ints(base / manifest_doc["labels"]) if manifest_doc.get("labels") else None

    if all(p is None for p in presence):
        return MultiViewDataset(views=raw, c=c, labels=labels)

    if labels is not None:
        n = labels.size
    else:
        sizes = [x.shape[1] for x, p in zip(raw, presence) if p is None]
        tops = [int(p.max()) + 1 for p in presence if p is not None and p.size]
        n = sizes[0] if sizes else max(tops)
    index = []
    for k, (x, p) in enumerate(zip(raw, presence)):
        if p is None:
            p = np.arange(x.shape[1])
        w = IndexMatrix(rows=p, n=n)
        if w.m != x.shape[1]:
            raise DatasetError(
                f"view {k}: presence lists {w.m} samples but the file has {x.shape[1]} rows")
        index.append(w)
    per = round(1.0 - float(np.mean([w.m for w in index])) / n, 6)
    return IncompleteDataset(views=raw, index=index, c=c, labels=labels, per=per)


def save_dataset(data: MultiViewDataset | IncompleteDataset, directory, prefix="view") -> Path:
    """Write ``data`` as CSV files plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for v, x in enumerate(data.views):
        name = f"{prefix}{v}.csv"
        np.savetxt(directory / name, x.T, delimiter=",", fmt="%.17g")
        entry = {"path": name}
        if isinstance(data, IncompleteDataset):
            idx = f"{prefix}{v}.idx"
            np.savetxt(directory / idx, data.index[v].rows, fmt="%d")
            entry["presence"] = idx
        entries.append(entry)
    manifest_doc = {"views": entries, "clusters": int(data.c)}
    if data.labels is not None:
        np.savetxt(directory / "labels.txt", data.labels, fmt="%d")
        manifest_doc["labels"] = "labels.txt"
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest_doc, indent=2))
    return path
