"""Ordinary least squares with dummy-coded factors and coefficient inference."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy import stats

from .dataset import DataError, Dataset

INTERCEPT = "(Intercept)"
SIGNIF_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.1, "."))


class SingularDesignError(ArithmeticError):
    """The design matrix is rank deficient (or has too few rows)."""

    def __init__(self, message: str, columns: Sequence[str] = ()):
        super().__init__(message)
        self.columns = list(columns)


@dataclass(frozen=True)
class Term:
    """One design column: a continuous variable or one dummy of a factor."""

    var: str
    level: object = None
    code: Optional[int] = None

    @property
    def name(self) -> str:
        return self.var if self.code is None else f"{self.var}={self.level}"


@dataclass(frozen=True)
class DesignSpec:
    """Column recipe, reusable on rows other than the ones it was built from.

    Factors get one dummy per level observed in the building rows except the
    first observed level, which is the reference.  Unseen levels in other rows
    fall on the reference.
    """

    response: str
    regressors: tuple
    terms: tuple

    @classmethod
    def build(cls, ds: Dataset, response: str, regressors: Sequence[str],
              rows: Optional[np.ndarray] = None) -> "DesignSpec":
        if response not in ds:
            raise DataError(f"unknown response column {response!r}")
        if ds.column(response).is_discrete:
            raise DataError(f"response column {response!r} is discrete; a linear model needs "
                            "a continuous response")
        regressors = tuple(regressors)
        unknown = [r for r in regressors if r not in ds]
        if unknown:
            raise DataError(f"unknown regressor columns: {unknown}")
        if response in regressors:
            raise DataError(f"response {response!r} listed as a regressor")
        if len(set(regressors)) != len(regressors):
            raise DataError("duplicate regressors")
        terms = []
        for name in regressors:
            col = ds.column(name)
            if not col.is_discrete:
                terms.append(Term(name))
                continue
            codes = col.values if rows is None else col.values[rows]
            present = np.zeros(col.kind.n_levels, dtype=bool)
            present[np.unique(codes)] = True
            observed = [c for c in range(col.kind.n_levels) if present[c]]
            for c in observed[1:]:
                terms.append(Term(name, col.kind.levels[c], c))
        return cls(response, regressors, tuple(terms))

    @property
    def column_names(self) -> list[str]:
        return [INTERCEPT] + [t.name for t in self.terms]

    @property
    def o(self) -> int:
        return len(self.terms)

    def groups(self) -> dict[str, list[int]]:
        """Design column indices (intercept is column 0) of each regressor."""
        out: dict[str, list[int]] = {r: [] for r in self.regressors}
        for j, t in enumerate(self.terms, start=1):
            out[t.var].append(j)
        return out

    def matrix(self, ds: Dataset, rows: Optional[np.ndarray] = None) -> np.ndarray:
        n = ds.n_rows if rows is None else len(rows)
        X = np.empty((n, 1 + len(self.terms)))
        X[:, 0] = 1.0
        for j, t in enumerate(self.terms, start=1):
            vals = ds.column(t.var).values
            if rows is not None:
                vals = vals[rows]
            X[:, j] = vals if t.code is None else (vals == t.code)
        return X

    def response_vector(self, ds: Dataset, rows: Optional[np.ndarray] = None) -> np.ndarray:
        y = ds.column(self.response).values
        return np.array(y if rows is None else y[rows], dtype=np.float64)


def design_matrix(ds: Dataset, response: str, regressors: Sequence[str],
                  rows: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray, DesignSpec]:
    """``(X, y, spec)`` with a leading intercept column in ``X``."""
    spec = DesignSpec.build(ds, response, regressors, rows)
    return spec.matrix(ds, rows), spec.response_vector(ds, rows), spec


def signif_code(p: float) -> str:
    for cut, code in SIGNIF_LEVELS:
        if p < cut:
            return code
    return ""


@dataclass(frozen=True)
class ModelFit:
    """OLS estimates; ``o`` counts regressor columns, excluding the intercept.

    ``mse`` is RSS / (n - o - 1) and ``r2_adjusted`` is ``1 - mse * c`` with
    ``c = (n - 1) / TSS``.
    """

    variables: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r2_adjusted: float
    mse: float
    rss: float
    tss: float
    n_obs: int
    o: int

    @property
    def r2(self) -> float:
        return 1.0 - self.rss / self.tss

    @property
    def df_resid(self) -> int:
        return self.n_obs - self.o - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X) @ self.coefficients

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.variables.index(name)])

    def table(self) -> list[dict]:
        return [
            {"term": v, "estimate": float(b), "std_error": float(se), "t_value": float(t),
             "p_value": float(p), "signif": signif_code(p)}
            for v, b, se, t, p in zip(self.variables, self.coefficients, self.std_errors,
                                      self.t_values, self.p_values)
        ]

    def summary(self) -> str:
        rows = self.table()
        width = max(len("Coefficients"), *(len(r["term"]) for r in rows))
        out = [f"{'Coefficients':<{width}}  {'Estimate':>12} {'Std. Error':>12} "
               f"{'t value':>9} {'Pr(>|t|)':>9}"]
        for r in rows:
            out.append(f"{r['term']:<{width}}  {r['estimate']:>12.4f} {r['std_error']:>12.4f} "
                       f"{r['t_value']:>9.3f} {r['p_value']:>9.3f} {r['signif']}")
        out.append(f"Adjusted R-squared: {self.r2_adjusted:.3f}   MSE: {self.mse:.4g}   "
                   f"n = {self.n_obs}, o = {self.o}")
        out.append("Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1")
        return "\n".join(out)


def ols_fit(X: np.ndarray, y: np.ndarray, names: Optional[Sequence[str]] = None) -> ModelFit:
    """Least squares via column-pivoted QR.

    ``X`` must carry its own intercept column.  Raises
    :class:`SingularDesignError` naming the dependent columns when ``X`` is
    rank deficient, or when there are no residual degrees of freedom.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    names = [f"x{j}" for j in range(k)] if names is None else list(names)
    if len(names) != k:
        raise ValueError("names do not match the number of columns")
    if y.shape != (n,):
        raise ValueError("y must be a vector with one entry per row of X")
    if n - k < 1:
        raise SingularDesignError(f"{n} rows cannot support {k} coefficients plus a variance")

    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(n, k) * np.finfo(float).eps * (diag[0] if k else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < k:
        bad = [names[j] for j in piv[rank:]]
        raise SingularDesignError(f"singular design; linearly dependent columns: {bad}", bad)

    beta_p = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(k)
    beta[piv] = beta_p
    resid = y - X @ beta
    rss = float(resid @ resid)
    dev = y - y.mean()
    tss = float(dev @ dev)
    df = n - k
    sigma2 = rss / df

    r_inv = scipy.linalg.solve_triangular(R, np.eye(k))
    cov_p = r_inv @ r_inv.T
    var = np.empty(k)
    var[piv] = np.diag(cov_p)
    se = np.sqrt(sigma2 * var)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = np.clip(2.0 * stats.t.sf(np.abs(t), df), 0.0, 1.0)

    c = (n - 1) / tss if tss > 0 else np.inf
    return ModelFit(
        variables=tuple(names), coefficients=beta, std_errors=se, t_values=t, p_values=p,
        r2_adjusted=1.0 - sigma2 * c, mse=sigma2, rss=rss, tss=tss, n_obs=n, o=k - 1,
    )


def fit_dataset(ds: Dataset, response: str, regressors: Sequence[str],
                rows: Optional[np.ndarray] = None) -> tuple[ModelFit, DesignSpec]:
    X, y, spec = design_matrix(ds, response, regressors, rows)
    return ols_fit(X, y, spec.column_names), spec


def group_p_values(fit: ModelFit, spec: DesignSpec) -> dict[str, float]:
    """Smallest p-value among each regressor's design columns."""
    return {var: float(min(fit.p_values[j] for j in cols)) if cols else 1.0
            for var, cols in spec.groups().items()}
