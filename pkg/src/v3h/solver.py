"""Alternating augmented-Lagrangian solver for heredity/variation clustering.

Every view ``v`` has presented data ``X`` (``d_v x m_v``), a self-representation
``Z`` (``m_v x m_v``) and an error term ``E``. The embedded representation
``W^T Z W`` is split into a heredity matrix ``M`` shared by all views and a
per-view variation matrix ``N``::

    X = X Z + E,      W^T Z W = M + p N

With this sign the closed-form variation update below is the exact minimizer
of the augmented Lagrangian; a negative ``p`` gives the opposite convention.

``M`` is pushed towards low rank by the eta-norm, ``E`` towards row sparsity
by the tau-norm, and each ``N`` defines a graph whose spectral embedding
``F`` is aligned with a consensus embedding ``H``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .dataset import IncompleteDataset
from .graph import laplacian_from_variation
from .norms import EtaNormParams, TauNormParams, eta_norm, eta_prox, tau_norm, tau_weights

log = logging.getLogger(__name__)

RATIO_FLOOR = 1e-12


class SolverError(ArithmeticError):
    """Raised when an iterate stops being finite."""


@dataclass(frozen=True)
class Hyperparams:
    """Model and optimizer settings.

    ``alpha`` weights the graph term, ``beta`` the tau-norm error penalty and
    ``gamma`` the alignment between per-view and consensus embeddings. The
    penalty ``omega`` starts at ``omega0`` and is multiplied by ``phi`` after
    every per-view multiplier update, capped at ``omega_max``.
    """

    c: int = 2
    alpha: float = 1e-3
    beta: float = 1e-4
    gamma: float = 1e-1
    p: float = 1.0
    eta: float = 1e-3
    tau: float = 1e-2
    weights: tuple | None = None
    omega0: float = 1e-3
    phi: float = 1.5
    omega_max: float = 1e6
    max_iter: int = 100
    tol: float = 1e-6
    seed: int | None = 0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("alpha, beta and gamma must be nonnegative")
        if self.p == 0:
            raise ValueError("p must be nonzero")
        if not self.phi > 1:
            raise ValueError("phi must exceed 1")
        if not 0 < self.omega0 <= self.omega_max:
            raise ValueError("need 0 < omega0 <= omega_max")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.c < 1:
            raise ValueError("c must be positive")
        # validate eagerly so bad eta/tau/weights fail at construction
        self.eta_params
        self.tau_params

    @property
    def eta_params(self) -> EtaNormParams:
        w = None if self.weights is None else np.asarray(self.weights, dtype=float)
        return EtaNormParams(eta=self.eta, weights=w)

    @property
    def tau_params(self) -> TauNormParams:
        return TauNormParams(tau=self.tau)

    def with_(self, **kw) -> "Hyperparams":
        return replace(self, **kw)


@dataclass
class SolverState:
    M: np.ndarray
    N: list
    Z: list
    E: list
    F: list
    H: np.ndarray
    C1: list
    C2: list
    zeta: list
    omega: float
    iter: int = 0


@dataclass
class ConvergenceTrace:
    """Per-iteration diagnostics, one entry per executed outer iteration."""

    objective_ratio: list = field(default_factory=list)
    eta_term: list = field(default_factory=list)
    tau_term: list = field(default_factory=list)
    graph_term: list = field(default_factory=list)
    align_term: list = field(default_factory=list)
    residual_x: list = field(default_factory=list)
    residual_z: list = field(default_factory=list)
    rowsum_dev: list = field(default_factory=list)
    omega: list = field(default_factory=list)

    def __len__(self):
        return len(self.objective_ratio)

    def rows(self):
        """Records as dicts keyed by column name, with a 1-based ``iteration``."""
        names = [f for f in self.__dataclass_fields__]
        for k in range(len(self)):
            row = {"iteration": k + 1}
            row.update({name: getattr(self, name)[k] for name in names})
            yield row


@dataclass
class FitResult:
    state: SolverState
    trace: ConvergenceTrace
    converged: bool


def _orthonormal(rng, n, c):
    Q, _ = np.linalg.qr(rng.standard_normal((n, c)))
    return Q


def init_state(data: IncompleteDataset, params: Hyperparams,
               random_indicators: bool = False) -> SolverState:
    """All-zero iterates.

    The indicator matrices also start at zero so that the first embedding
    step sees only the graph term. ``random_indicators=True`` instead draws
    seeded random orthonormal ``F`` and ``H``; at small ``alpha / gamma`` the
    alignment term then keeps ``F`` pinned to the random ``H``.
    """
    c = params.c
    if c > min(data.sizes):
        raise ValueError(
            f"c={c} exceeds the smallest view size {min(data.sizes)}")
    n = data.n
    if random_indicators:
        rng = np.random.default_rng(params.seed)
        F = [_orthonormal(rng, n, c) for _ in range(data.n_views)]
        H = _orthonormal(rng, n, c)
    else:
        F = [np.zeros((n, c)) for _ in range(data.n_views)]
        H = np.zeros((n, c))
    return SolverState(
        M=np.zeros((n, n)),
        N=[np.zeros((n, n)) for _ in data.views],
        Z=[np.zeros((w.m, w.m)) for w in data.index],
        E=[np.zeros_like(x) for x in data.views],
        F=F,
        H=H,
        C1=[np.zeros_like(x) for x in data.views],
        C2=[np.zeros((n, n)) for _ in data.views],
        zeta=[np.zeros(n) for _ in data.views],
        omega=float(params.omega0),
        iter=0,
    )


def heredity_target(state, data, params) -> np.ndarray:
    """Mean over views of ``W^T Z W - p N + C2 / omega``."""
    acc = np.zeros_like(state.M)
    for v, w in enumerate(data.index):
        acc += w.embed(state.Z[v]) - params.p * state.N[v] + state.C2[v] / state.omega
    return acc / data.n_views


def update_M(state, data, params) -> np.ndarray:
    """Eta-norm proximal step on the view-averaged target.

    Summing the per-view quadratic penalties gives a single prox at the mean
    target with penalty ``n_views * omega``.
    """
    A = heredity_target(state, data, params)
    state.M = eta_prox(A, params.eta_params, data.n_views * state.omega)
    return state.M


def update_Z(state, data, params, v) -> np.ndarray:
    X = data.views[v]
    w = data.index[v]
    om = state.omega
    rhs = X.T @ (X - state.E[v] + state.C1[v] / om)
    rhs += w.restrict(state.M + params.p * state.N[v] - state.C2[v] / om)
    G = np.eye(w.m) + X.T @ X
    state.Z[v] = linalg.solve(G, rhs, assume_a="pos")
    return state.Z[v]


def z_stationarity(state, data, params, v) -> float:
    """Relative max-abs gradient of the Z subproblem at the current Z."""
    X = data.views[v]
    w = data.index[v]
    om = state.omega
    Z = state.Z[v]
    target = w.restrict(state.M + params.p * state.N[v] - state.C2[v] / om)
    fit = X - X @ Z - state.E[v] + state.C1[v] / om
    grad = 2.0 * (Z - target) - 2.0 * X.T @ fit
    scale = 1.0 + max(np.max(np.abs(target), initial=0.0),
                      np.max(np.abs(X.T @ (X - state.E[v] + state.C1[v] / om)), initial=0.0),
                      np.max(np.abs(X.T @ X), initial=0.0) * np.max(np.abs(Z), initial=0.0))
    return float(np.max(np.abs(grad)) / scale)


def pairwise_sq_dists(F) -> np.ndarray:
    """``T[i, j] = ||F_i - F_j||^2`` with an exact zero diagonal."""
    sq = np.sum(F * F, axis=1)
    T = sq[:, None] + sq[None, :] - 2.0 * F @ F.T
    T = np.maximum(0.5 * (T + T.T), 0.0)
    np.fill_diagonal(T, 0.0)
    return T


def variation_scratch(state, data, params, v):
    """``K`` and ``T`` for the variation update of view ``v``."""
    w = data.index[v]
    K = w.embed(state.Z[v]) - state.M + state.C2[v] / state.omega
    T = pairwise_sq_dists(state.F[v])
    return K, T


def update_N_zeta(state, data, params, v):
    """Row-wise minimizer of the variation subproblem, clamped at zero.

    The penalty is ``omega/2 ||K - p N||^2``, so the unconstrained row
    solution is ``K/p - alpha T / (2 omega p^2) + zeta / (omega p^2)``;
    ``zeta`` is chosen so each row sums to one before clamping.
    """
    n = data.n
    p, om, alpha = params.p, state.omega, params.alpha
    K, T = variation_scratch(state, data, params, v)
    base = K / p - alpha / (2.0 * om * p * p) * T
    np.fill_diagonal(base, 0.0)
    zeta = om * p * p / (n - 1) * (1.0 - base.sum(axis=1))
    Y = base + zeta[:, None] / (om * p * p)
    N = np.maximum(Y, 0.0)
    np.fill_diagonal(N, 0.0)
    state.N[v] = N
    state.zeta[v] = zeta
    return N, zeta


def update_E(state, data, params, v) -> np.ndarray:
    """Row-rescaled residual with tau weights taken at the previous ``E``."""
    X = data.views[v]
    target = X - X @ state.Z[v] + state.C1[v] / state.omega
    d = tau_weights(state.E[v], params.tau_params)
    state.E[v] = target / (1.0 + params.beta / state.omega * d)[:, None]
    return state.E[v]


def _eigvecs(A, c, largest=False):
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    lo, hi = (n - c, n - 1) if largest else (0, c - 1)
    vals, vecs = linalg.eigh(A, subset_by_index=[lo, hi])
    if largest:
        vals, vecs = vals[::-1], vecs[:, ::-1]
    return vals, vecs


def f_matrix(state, params, v) -> np.ndarray:
    L = laplacian_from_variation(state.N[v])
    return params.alpha * L - params.gamma * state.H @ state.H.T


def update_F(state, params, v) -> np.ndarray:
    """Eigenvectors of ``alpha L - gamma H H^T`` for the ``c`` smallest eigenvalues."""
    _, vecs = _eigvecs(f_matrix(state, params, v), params.c)
    state.F[v] = vecs
    return vecs


def h_matrix(state, params) -> np.ndarray:
    return params.gamma * sum(F @ F.T for F in state.F)


def update_H(state, params) -> np.ndarray:
    _, vecs = _eigvecs(h_matrix(state, params), params.c, largest=True)
    state.H = vecs
    return vecs


def constraint_residuals(state, data, params, v):
    X = data.views[v]
    rx = X - X @ state.Z[v] - state.E[v]
    rz = data.index[v].embed(state.Z[v]) - state.M - params.p * state.N[v]
    return rx, rz


def update_multipliers(state, data, params, v=None):
    """Dual ascent on both constraints and penalty growth.

    With ``v`` given only that view's multipliers move; the penalty is grown
    once per call either way.
    """
    views = range(data.n_views) if v is None else [v]
    om = state.omega
    for u in views:
        rx, rz = constraint_residuals(state, data, params, u)
        state.C1[u] = state.C1[u] + om * rx
        state.C2[u] = state.C2[u] + om * rz
    state.omega = min(params.phi * om, params.omega_max)
    return state.C1, state.C2, state.omega


def objective(state, data, params):
    """Ratio of the regularizers to the squared constraint residuals.

    Returns ``(ratio, terms)`` where ``terms`` holds the raw pieces:
    ``eta``, ``tau``, ``graph``, ``align`` (already signed, so the numerator
    is their sum), ``numerator``, ``fit`` and ``consensus`` residuals and
    ``denominator``.
    """
    eta_t = eta_norm(state.M, params.eta_params)
    tau_t = graph_t = align_t = 0.0
    fit_t = cons_t = 0.0
    HHt = state.H @ state.H.T
    for v in range(data.n_views):
        F = state.F[v]
        tau_t += params.beta * tau_norm(state.E[v], params.tau_params)
        L = laplacian_from_variation(state.N[v])
        graph_t += params.alpha * float(np.trace(F.T @ L @ F))
        align_t -= params.gamma * float(np.sum((F @ F.T) * HHt))
        rx, rz = constraint_residuals(state, data, params, v)
        fit_t += float(np.sum(rx * rx))
        cons_t += float(np.sum(rz * rz))
    num = eta_t + tau_t + graph_t + align_t
    den = max(fit_t + cons_t, RATIO_FLOOR)
    terms = {"eta": eta_t, "tau": tau_t, "graph": graph_t, "align": align_t,
             "numerator": num, "fit": fit_t, "consensus": cons_t, "denominator": den}
    return num / den, terms


def _check(step, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise SolverError(f"non-finite iterate after {step}")


def _record(trace, state, data, params):
    ratio, terms = objective(state, data, params)
    rx_max = rz_max = dev = 0.0
    for v in range(data.n_views):
        rx, rz = constraint_residuals(state, data, params, v)
        rx_max = max(rx_max, float(np.linalg.norm(rx)))
        rz_max = max(rz_max, float(np.linalg.norm(rz)))
        dev = max(dev, float(np.max(np.abs(state.N[v].sum(axis=1) - 1.0))))
    trace.objective_ratio.append(ratio)
    trace.eta_term.append(terms["eta"])
    trace.tau_term.append(terms["tau"])
    trace.graph_term.append(terms["graph"])
    trace.align_term.append(terms["align"])
    trace.residual_x.append(rx_max)
    trace.residual_z.append(rz_max)
    trace.rowsum_dev.append(dev)
    trace.omega.append(state.omega)
    return ratio


def iterate(state, data, params):
    """One outer iteration: per-view sweeps, then the shared variables."""
    for v in range(data.n_views):
        _check("update_Z", update_Z(state, data, params, v))
        _check("update_N_zeta", *update_N_zeta(state, data, params, v))
        _check("update_E", update_E(state, data, params, v))
        _check("update_F", update_F(state, params, v))
        C1, C2, _ = update_multipliers(state, data, params, v)
        _check("update_multipliers", C1[v], C2[v])
    _check("update_M", update_M(state, data, params))
    _check("update_H", update_H(state, params))
    state.iter += 1
    return state


def fit(data: IncompleteDataset, params: Hyperparams, callback=None) -> FitResult:
    """Run the alternating solver until the objective ratio settles.

    Stops when ``|r_k - r_{k-1}| <= tol * max(|r_{k-1}|, 1e-12)`` or after
    ``max_iter`` outer iterations.
    """
    state = init_state(data, params)
    trace = ConvergenceTrace()
    prev = None
    converged = False
    for _ in range(params.max_iter):
        iterate(state, data, params)
        ratio = _record(trace, state, data, params)
        if callback is not None:
            callback(state, trace)
        if prev is not None:
            change = abs(ratio - prev) / max(abs(prev), RATIO_FLOOR)
            if change < params.tol:
                converged = True
                break
        prev = ratio
    log.debug("fit stopped after %d iterations (converged=%s)", state.iter, converged)
    return FitResult(state=state, trace=trace, converged=converged)


def relative_changes(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return np.array([])
    return np.abs(np.diff(v)) / np.maximum(np.abs(v[:-1]), RATIO_FLOOR)
