"""Nonconvex rank and row-sparsity surrogates.

The eta-norm interpolates between rank (small ``eta``) and the nuclear norm
(large ``eta``); the tau-norm interpolates between the L2,1 norm (small
``tau``) and the squared Frobenius norm (large ``tau``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# singular values below this are treated as exact zeros
SIGMA_EPS = 1e-12


@dataclass(frozen=True)
class EtaNormParams:
    """Parameters of the eta-norm.

    Parameters
    ----------
    eta : float
        Interpolation parameter, ``eta > 0``.
    weights : array_like or None
        Positive per-singular-value weights. ``None`` means all ones. A
        vector shorter or longer than the number of singular values is
        padded with its last entry or truncated.
    """

    eta: float = 1e-3
    weights: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.size == 0 or np.any(w <= 0):
                raise ValueError("weights must be a non-empty positive vector")
            object.__setattr__(self, "weights", w)

    def weights_for(self, k: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(k)
        w = self.weights
        if w.size >= k:
            return w[:k]
        return np.concatenate([w, np.full(k - w.size, w[-1])])


@dataclass(frozen=True)
class TauNormParams:
    tau: float = 1e-2

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def _check_finite(a, name):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def h_value(sigma, params: EtaNormParams) -> float:
    """Scalar surrogate ``h(sigma) = sum (eta+w) s / (eta + w s)``."""
    s = np.asarray(sigma, dtype=float)
    s = np.where(s < SIGMA_EPS, 0.0, s)
    w = params.weights_for(s.size)
    eta = params.eta
    return float(np.sum((eta + w) * s / (eta + w * s)))


def h_gradient(sigma, params: EtaNormParams) -> np.ndarray:
    """Elementwise derivative of :func:`h_value`.

    ``d/ds [(eta+w) s / (eta + w s)] = (eta+w) eta / (eta + w s)^2``
    """
    s = np.asarray(sigma, dtype=float)
    s = np.where(s < SIGMA_EPS, 0.0, s)
    w = params.weights_for(s.size)
    eta = params.eta
    return (eta + w) * eta / (eta + w * s) ** 2


def eta_norm(M, params: EtaNormParams) -> float:
    """Evaluate the eta-norm of a matrix from its singular values."""
    M = _check_finite(M, "M")
    if M.size == 0:
        return 0.0
    sigma = np.linalg.svd(M, compute_uv=False)
    return h_value(sigma, params)


def prox_objective(sigma, sigma_a, params: EtaNormParams, omega: float) -> float:
    """``h(sigma) + omega/2 * ||sigma - sigma_a||^2``."""
    sigma = np.asarray(sigma, dtype=float)
    return h_value(sigma, params) + 0.5 * omega * float(np.sum((sigma - sigma_a) ** 2))


def prox_singular_values(sigma_a, params: EtaNormParams, omega: float,
                         max_inner: int = 20, tol: float = 1e-8) -> np.ndarray:
    """Moreau-Yosida operator of ``h`` applied to a vector of singular values.

    Runs the DC iteration ``s <- max(sigma_a - grad h(s) / omega, 0)`` from
    ``s = sigma_a``. The problem is separable and each scalar objective is
    concave near zero, so the DC fixed point is a local minimum; every
    coordinate is then compared against the boundary candidate ``s = 0`` and
    the smaller objective is kept.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    sigma_a = np.asarray(sigma_a, dtype=float)
    s = sigma_a.copy()
    for _ in range(max_inner):
        s_new = np.maximum(sigma_a - h_gradient(s, params) / omega, 0.0)
        step = np.max(np.abs(s_new - s)) if s.size else 0.0
        s = s_new
        if step < tol:
            break

    w = params.weights_for(s.size)
    eta = params.eta

    def f(x):
        xz = np.where(x < SIGMA_EPS, 0.0, x)
        return (eta + w) * xz / (eta + w * xz) + 0.5 * omega * (x - sigma_a) ** 2

    zero = np.zeros_like(s)
    s = np.where(f(zero) < f(s), zero, s)
    # never worse than the starting point
    s = np.where(f(sigma_a) < f(s), sigma_a, s)
    return s


def eta_prox(A, params: EtaNormParams, omega: float, max_inner: int = 20,
             tol: float = 1e-8) -> np.ndarray:
    """Proximal operator of the eta-norm with penalty ``omega``.

    Returns ``argmin_M ||M||_eta + omega/2 ||M - A||_F^2`` computed through
    the SVD of ``A`` and :func:`prox_singular_values`.
    """
    A = _check_finite(A, "A")
    if A.size == 0:
        return A.copy()
    U, sigma_a, Vt = np.linalg.svd(A, full_matrices=False)
    s = prox_singular_values(sigma_a, params, omega, max_inner=max_inner, tol=tol)
    return (U * s) @ Vt


def _row_norms(E):
    return np.sqrt(np.sum(E * E, axis=1))


def tau_norm(E, params: TauNormParams) -> float:
    """Row-wise tau-norm ``sum_i (1+tau) ||E_i||^2 / (tau + ||E_i||)``."""
    E = _check_finite(E, "E")
    if E.size == 0:
        return 0.0
    r = _row_norms(np.atleast_2d(E))
    tau = params.tau
    return float(np.sum((1.0 + tau) * r ** 2 / (tau + r)))


def tau_weights(E, params: TauNormParams) -> np.ndarray:
    """Diagonal of the tau-norm weight matrix, one entry per row of ``E``."""
    E = _check_finite(E, "E")
    r = _row_norms(np.atleast_2d(E))
    tau = params.tau
    return (1.0 + tau) * (r + 2.0 * tau) / (r + tau) ** 2


def tau_weight_matrix(E, params: TauNormParams) -> np.ndarray:
    """Diagonal matrix ``D_E`` such that ``D_E @ E`` is the gradient of
    :func:`tau_norm` at ``E``."""
    return np.diag(tau_weights(E, params))


def tau_gradient(E, params: TauNormParams) -> np.ndarray:
    E = np.atleast_2d(np.asarray(E, dtype=float))
    return tau_weights(E, params)[:, None] * E
