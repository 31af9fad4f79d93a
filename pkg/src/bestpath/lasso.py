"""LASSO by cyclic coordinate descent with a cross-validated lambda.

The objective is ``(1/2n) ||y - b0 - X b||^2 + lam * ||b||_1`` on standardized
columns (mean 0, ML standard deviation 1) and a centered response; the
coefficients are mapped back to the original scale afterwards.  Multiplying the
objective by ``n`` gives the un-normalized form ``1/2 RSS + (n lam) ||b||_1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np

from .crossval import kfold_indices
from .dataset import Dataset
from .linmodel import DesignSpec

logger = logging.getLogger(__name__)

# Active-set sweeps between full sweeps before the exact polish is tried.
ACTIVE_SWEEPS = 20


@numba.njit(cache=True, nogil=True)
def _soft_threshold(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@numba.njit(cache=True, nogil=True)
def _objective(G, c, yy, beta, lam):
    # (1/2n)||yc - Xs b||^2 expanded through the Gram matrix
    p = beta.shape[0]
    quad = 0.0
    lin = 0.0
    l1 = 0.0
    for j in range(p):
        lin += c[j] * beta[j]
        l1 += abs(beta[j])
        for k in range(p):
            quad += beta[j] * G[j, k] * beta[k]
    return 0.5 * (yy - 2.0 * lin + quad) + lam * l1


@numba.njit(cache=True, nogil=True)
def _sweep(G, lam, beta, grad, active_only):
    p = beta.shape[0]
    max_delta = 0.0
    for j in range(p):
        if G[j, j] == 0.0 or (active_only and beta[j] == 0.0):
            continue
        z = grad[j] + G[j, j] * beta[j]
        new = _soft_threshold(z, lam) / G[j, j]
        delta = new - beta[j]
        if delta != 0.0:
            for k in range(p):
                grad[k] -= G[k, j] * delta
            beta[j] = new
            if abs(delta) > max_delta:
                max_delta = abs(delta)
    return max_delta


@numba.njit(cache=True, nogil=True)
def _polish(G, c, lam, beta, grad):
    # Exact minimizer on the current sign pattern; accepted only if every sign
    # survives, in which case the objective cannot increase.
    p = beta.shape[0]
    m = 0
    for j in range(p):
        if beta[j] != 0.0:
            m += 1
    if m == 0:
        return
    idx = np.empty(m, dtype=np.int64)
    m = 0
    for j in range(p):
        if beta[j] != 0.0:
            idx[m] = j
            m += 1
    A = np.empty((m, m))
    rhs = np.empty(m)
    for a in range(m):
        ja = idx[a]
        rhs[a] = c[ja] - lam * np.sign(beta[ja])
        for b in range(m):
            A[a, b] = G[ja, idx[b]]
    try:
        sol = np.linalg.solve(A, rhs)
    except Exception:
        return
    for a in range(m):
        if not np.isfinite(sol[a]) or np.sign(sol[a]) != np.sign(beta[idx[a]]):
            return
    for a in range(m):
        delta = sol[a] - beta[idx[a]]
        if delta != 0.0:
            for k in range(p):
                grad[k] -= G[k, idx[a]] * delta
            beta[idx[a]] = sol[a]


@numba.njit(cache=True, nogil=True)
def _cd_solve(G, c, yy, lam, beta, grad, tol, max_iter, hist):
    """Coordinate descent at one lambda; updates ``beta`` and ``grad`` in place.

    ``grad`` holds ``c - G beta``.  Full sweeps alternate with sweeps over the
    nonzero coefficients only.  When an active-set pass settles, the active
    coefficients are polished by an exact solve on their sign pattern, which
    removes the slow tail of coordinate descent on collinear columns.
    Convergence is declared after a full sweep whose largest coefficient
    change is below ``tol``.  ``hist`` (length 0 to disable) receives the
    objective before the first sweep and after each sweep.
    """
    track = hist.shape[0] > 0
    if track:
        hist[0] = _objective(G, c, yy, beta, lam)
    it = 0
    while it < max_iter:
        delta = _sweep(G, lam, beta, grad, False)
        it += 1
        if track and it < hist.shape[0]:
            hist[it] = _objective(G, c, yy, beta, lam)
        if delta < tol:
            return it, True
        for _ in range(ACTIVE_SWEEPS):
            if it >= max_iter:
                break
            delta = _sweep(G, lam, beta, grad, True)
            it += 1
            if track and it < hist.shape[0]:
                hist[it] = _objective(G, c, yy, beta, lam)
            if delta < tol:
                break
        _polish(G, c, lam, beta, grad)
    return it, False


@numba.njit(cache=True, nogil=True)
def _cd_path(G, c, yy, lambdas, tol, max_iter):
    p = c.shape[0]
    beta = np.zeros(p)
    grad = c.copy()
    out = np.zeros((lambdas.shape[0], p))
    iters = np.zeros(lambdas.shape[0], dtype=np.int64)
    conv = np.zeros(lambdas.shape[0], dtype=np.bool_)
    no_hist = np.zeros(0)
    for k in range(lambdas.shape[0]):
        iters[k], conv[k] = _cd_solve(G, c, yy, lambdas[k], beta, grad, tol, max_iter, no_hist)
        out[k] = beta
    return out, iters, conv


@dataclass(frozen=True)
class Standardization:
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: float

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray) -> "Standardization":
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        return cls(mean, sd, float(y.mean()))

    def transform(self, X: np.ndarray) -> np.ndarray:
        safe = np.where(self.x_sd > 0, self.x_sd, 1.0)
        Xs = (X - self.x_mean) / safe
        Xs[:, self.x_sd == 0] = 0.0
        return np.ascontiguousarray(Xs)


@dataclass(frozen=True)
class LassoFit:
    lambda_: float
    coefficients: np.ndarray
    intercept: float
    beta_std: np.ndarray
    standardization: Standardization
    names: tuple
    n_iter: int = 0
    converged: bool = True
    lambda_grid: Optional[np.ndarray] = field(default=None, repr=False)
    cv_errors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def active_set(self) -> list[str]:
        return [n for n, b in zip(self.names, self.coefficients) if b != 0.0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + np.asarray(X) @ self.coefficients


def _prepare(X: np.ndarray, y: np.ndarray):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    st = Standardization.fit(X, y)
    Xs = st.transform(X)
    yc = y - st.y_mean
    n = len(yc)
    G = np.ascontiguousarray(Xs.T @ Xs / n)
    c = Xs.T @ yc / n
    return st, G, c, float(yc @ yc) / n


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest lambda at which every coefficient is zero."""
    _, _, c, _ = _prepare(X, y)
    return float(np.max(np.abs(c))) if c.size else 0.0


def lambda_grid(X: np.ndarray, y: np.ndarray, size: int = 100, eps: float = 1e-4) -> np.ndarray:
    """``size`` log-spaced values from ``lambda_max`` down to ``eps * lambda_max``."""
    top = lambda_max(X, y)
    if top == 0.0:
        return np.zeros(1)
    return np.geomspace(top, top * eps, size)


def lasso_path(X: np.ndarray, y: np.ndarray, lambdas: Optional[Sequence[float]] = None,
               tol: float = 1e-7, max_iter: int = 10_000,
               names: Optional[Sequence[str]] = None) -> list[LassoFit]:
    """Warm-started coordinate descent along a decreasing lambda grid.

    ``X`` has no intercept column.  Fits that hit ``max_iter`` are returned
    with ``converged=False``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(1, p + 1))
    lams = lambda_grid(X, y) if lambdas is None else np.asarray(lambdas, dtype=np.float64)
    if np.any(np.diff(lams) > 0):
        raise ValueError("lambda grid must be non-increasing")
    if np.any(lams < 0):
        raise ValueError("lambda must be non-negative")
    st, G, c, yy = _prepare(X, y)
    betas, iters, conv = _cd_path(G, c, yy, lams, tol, max_iter)
    fits = []
    safe_sd = np.where(st.x_sd > 0, st.x_sd, 1.0)
    for lam, b, it, ok in zip(lams, betas, iters, conv):
        if not ok:
            logger.warning("lasso did not converge at lambda=%.4g after %d sweeps", lam, it)
        coef = np.where(st.x_sd > 0, b / safe_sd, 0.0)
        intercept = st.y_mean - float(st.x_mean @ coef)
        fits.append(LassoFit(float(lam), coef, intercept, b.copy(), st, names, int(it), bool(ok)))
    return fits


def objective_history(X: np.ndarray, y: np.ndarray, lam: float, tol: float = 1e-7,
                      max_iter: int = 10_000) -> np.ndarray:
    """Objective after each sweep of a cold start at ``lam`` (standardized scale)."""
    _, G, c, yy = _prepare(X, y)
    beta = np.zeros(len(c))
    hist = np.full(max_iter + 1, np.nan)
    it, _ = _cd_solve(G, c, yy, float(lam), beta, c.copy(), tol, max_iter, hist)
    return hist[: it + 1]


def kkt_violation(fit: LassoFit, X: np.ndarray, y: np.ndarray) -> float:
    """Largest KKT residual of ``fit`` on the standardized scale."""
    st = fit.standardization
    Xs = st.transform(np.asarray(X, dtype=np.float64))
    r = (np.asarray(y, dtype=np.float64) - st.y_mean) - Xs @ fit.beta_std
    g = Xs.T @ r / len(r)
    active = fit.beta_std != 0.0
    viol = np.where(active, np.abs(g - fit.lambda_ * np.sign(fit.beta_std)),
                    np.maximum(np.abs(g) - fit.lambda_, 0.0))
    viol[st.x_sd == 0] = 0.0
    return float(viol.max()) if viol.size else 0.0


def lasso_design(ds: Dataset, response: str, regressors: Sequence[str],
                 rows: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray, DesignSpec]:
    """Same dummy coding as the OLS design, without the intercept column."""
    spec = DesignSpec.build(ds, response, regressors, rows)
    return spec.matrix(ds, rows)[:, 1:], spec.response_vector(ds, rows), spec


def lasso_cv(ds: Dataset, response: str, regressors: Optional[Sequence[str]] = None,
             folds: int = 10, seed: int = 42, grid_size: int = 100, eps: float = 1e-4,
             tol: float = 1e-7, max_iter: int = 10_000) -> LassoFit:
    """Pick lambda by k-fold CV error and refit on all rows.

    ``regressors`` defaults to every column other than ``response``.  Ties in
    CV error go to the larger lambda.
    """
    if regressors is None:
        regressors = [n for n in ds.names if n != response]
    X, y, spec = lasso_design(ds, response, regressors)
    names = [t.name for t in spec.terms]
    grid = lambda_grid(X, y, grid_size, eps)
    errors = np.zeros(len(grid))
    everything = np.arange(ds.n_rows)
    index_sets = kfold_indices(ds.n_rows, folds, seed)
    for val in index_sets:
        train = np.setdiff1d(everything, val, assume_unique=True)
        path = lasso_path(X[train], y[train], grid, tol, max_iter, names)
        for k, fit in enumerate(path):
            resid = y[val] - fit.predict(X[val])
            errors[k] += float(resid @ resid) / len(val)
    errors /= len(index_sets)
    best = int(np.argmin(errors))
    full = lasso_path(X, y, grid[: best + 1], tol, max_iter, names)[-1]
    return LassoFit(full.lambda_, full.coefficients, full.intercept, full.beta_std,
                    full.standardization, full.names, full.n_iter, full.converged,
                    grid, errors)
