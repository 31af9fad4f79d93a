"""k-fold cross-validation of OLS fits and repeated train/test splitting.

Randomness comes from numpy's PCG64 generator.  k-fold assignments use
``default_rng(seed).permutation(n)`` cut into ``folds`` contiguous chunks
(sizes differ by at most one).  Train/test split ``r`` uses the r-th child of
``SeedSequence(seed).spawn(repeats)``, so every split is reproducible on its
own and all partitions can be generated before any work is farmed out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .dataset import Dataset
from .linmodel import DesignSpec, SingularDesignError, ols_fit


class FoldFailure(SingularDesignError):
    """A training fold produced a singular design."""


@dataclass(frozen=True)
class CVResult:
    """Cross-validated fit quality of one regressor set.

    ``cv_mse`` averages, over folds, the out-of-fold mean squared error
    rescaled by ``n_tr / (n_tr - o - 1)`` (``n_tr`` the training-fold size,
    ``o`` its regressor-column count).  ``cv_r2_adjusted = 1 - cv_mse * c``
    with ``c = (n - 1) / TSS`` from the full sample.

    ``cv_rmse`` (root of the plain out-of-fold MSE averaged over folds) and
    ``cv_r2_cor`` (fold-averaged squared correlation between predictions and
    observations) are reported for comparison with common CV tooling; they
    play no part in selection.
    """

    folds: int
    seed: int
    cv_mse: float
    cv_r2_adjusted: float
    cv_rmse: float
    cv_r2_cor: float
    fold_mse: tuple


def kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Validation index sets, each sorted; together they partition ``range(n)``."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > n:
        raise ValueError(f"cannot cut {n} rows into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, folds)]


def kfold_cv(ds: Dataset, response: str, regressors: Sequence[str], folds: int = 10,
             seed: int = 42) -> CVResult:
    """Cross-validate ``response ~ regressors`` by OLS.

    Each training fold builds its own dummy coding.  A singular training fold
    raises :class:`FoldFailure`.
    """
    n = ds.n_rows
    if n < 2 * folds and folds != n:
        raise ValueError(f"{n} rows is too few for {folds}-fold cross-validation")
    y_all = ds.column(response).values.astype(np.float64)
    dev = y_all - y_all.mean()
    c = (n - 1) / float(dev @ dev)

    scaled, plain, cor2 = [], [], []
    everything = np.arange(n)
    for k, val in enumerate(kfold_indices(n, folds, seed)):
        train = np.setdiff1d(everything, val, assume_unique=True)
        spec = DesignSpec.build(ds, response, regressors, train)
        try:
            fit = ols_fit(spec.matrix(ds, train), y_all[train], spec.column_names)
        except SingularDesignError as exc:
            raise FoldFailure(f"fold {k}: {exc}", exc.columns) from exc
        pred = fit.predict(spec.matrix(ds, val))
        resid = y_all[val] - pred
        mse = float(resid @ resid) / len(val)
        n_tr = len(train)
        scaled.append(mse * n_tr / (n_tr - fit.o - 1))
        plain.append(mse)
        cor2.append(_squared_correlation(pred, y_all[val]))

    cv_mse = float(np.mean(scaled))
    return CVResult(
        folds=folds, seed=seed, cv_mse=cv_mse, cv_r2_adjusted=1.0 - cv_mse * c,
        cv_rmse=float(np.sqrt(np.mean(plain))), cv_r2_cor=_nanmean(cor2),
        fold_mse=tuple(scaled),
    )


def _nanmean(values: list) -> float:
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[~np.isnan(arr)]
    return float(arr.mean()) if arr.size else float("nan")


def _squared_correlation(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) < 2:
        return float("nan")
    da, db = a - a.mean(), b - b.mean()
    denom = float((da @ da) * (db @ db))
    return float((da @ db) ** 2 / denom) if denom > 0 else float("nan")


def train_test_splits(data: Union[Dataset, int], train_frac: float = 0.7, repeats: int = 100,
                      seed: int = 42) -> list[tuple[np.ndarray, np.ndarray]]:
    """``repeats`` random (train, test) partitions of the rows, each sorted.

    The training part has ``round(train_frac * n)`` rows.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    n = data.n_rows if isinstance(data, Dataset) else int(data)
    n_train = int(round(train_frac * n))
    if not 0 < n_train < n:
        raise ValueError(f"train_frac={train_frac} leaves an empty side with n={n}")
    out = []
    for child in np.random.SeedSequence(seed).spawn(repeats):
        perm = np.random.default_rng(child).permutation(n)
        out.append((np.sort(perm[:n_train]), np.sort(perm[n_train:])))
    return out
