"""Affinity and combinatorial Laplacian built from a variation matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GraphLaplacian:
    """``S`` affinity, ``G`` diagonal degree matrix, ``L = G - S``."""

    S: np.ndarray
    G: np.ndarray
    L: np.ndarray

    @property
    def degrees(self) -> np.ndarray:
        return np.diag(self.G).copy()


def affinity(N) -> np.ndarray:
    """Symmetric nonnegative affinity ``(|N| + |N|^T) / 2``."""
    N = np.asarray(N, dtype=float)
    if N.ndim != 2 or N.shape[0] != N.shape[1]:
        raise ValueError(f"N must be square, got shape {N.shape}")
    if not np.all(np.isfinite(N)):
        raise ValueError("N contains non-finite entries")
    A = np.abs(N)
    return 0.5 * (A + A.T)


def laplacian(S, atol: float = 1e-12) -> GraphLaplacian:
    """Unnormalized Laplacian ``G - S`` of a symmetric nonnegative affinity.

    The degree matrix is not used to rescale ``L``; callers wanting a
    normalized variant must build it themselves.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"S must be square, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if not np.allclose(S, S.T, rtol=0.0, atol=atol * scale):
        raise ValueError("affinity must be symmetric")
    if np.any(S < 0):
        raise ValueError("affinity must be nonnegative")
    deg = S.sum(axis=1)
    G = np.diag(deg)
    return GraphLaplacian(S=S, G=G, L=G - S)


def laplacian_from_variation(N) -> np.ndarray:
    """Shortcut returning only ``L`` for a variation matrix ``N``."""
    return laplacian(affinity(N)).L
