"""Out-of-sample comparison of the best path model against cross-validated LASSO.

Every split is a random 70/30 (by default) partition.  Both methods are fitted
on the training rows only and scored by mean squared prediction error on the
test rows.  By default the best path arm re-runs the whole selection
(forest, path steps, CV, pruning) inside each training split; ``paper_mode``
instead selects once on all rows and only refits the chosen regressors per
split.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .crossval import train_test_splits
from .dataset import Dataset
from .lasso import lasso_cv, lasso_design
from .linmodel import fit_dataset
from .selector import SelectConfig, select

logger = logging.getLogger(__name__)

# (train, test) -> predictions for the test rows
Arm = Callable[[Dataset, Dataset], np.ndarray]


def ols_arm(target: str, regressors: Sequence[str]) -> Arm:
    """OLS on a fixed regressor set."""
    regressors = list(regressors)

    def run(train: Dataset, test: Dataset) -> np.ndarray:
        fit, spec = fit_dataset(train, target, regressors)
        return fit.predict(spec.matrix(test))

    return run


def bestpath_arm(target: str, config: SelectConfig) -> Arm:
    def run(train: Dataset, test: Dataset) -> np.ndarray:
        report = select(train, target, config)
        if report.mf is None:
            return np.full(test.n_rows, train.column(target).values.mean())
        return report.mf.predict(report.mf_spec.matrix(test))

    return run


def lasso_arm(target: str, folds: int = 10, seed: int = 42, grid_size: int = 100) -> Arm:
    def run(train: Dataset, test: Dataset) -> np.ndarray:
        regressors = [n for n in train.names if n != target]
        fit = lasso_cv(train, target, regressors, folds, seed, grid_size)
        # dummy coding follows the training rows
        _, _, spec = lasso_design(train, target, regressors)
        return fit.predict(spec.matrix(test)[:, 1:])

    return run


@dataclass(frozen=True)
class SplitOutcome:
    split: int
    mse_a: float
    mse_b: float
    winner: str
    error: str = ""


@dataclass
class Comparison:
    names: tuple
    outcomes: list = field(default_factory=list)

    @property
    def completed(self) -> list[SplitOutcome]:
        return [o for o in self.outcomes if not o.error]

    @property
    def failures(self) -> int:
        return len(self.outcomes) - len(self.completed)

    def wins(self, name: Optional[str] = None) -> int:
        name = self.names[0] if name is None else name
        return sum(o.winner == name for o in self.completed)

    def header(self) -> list[str]:
        return ["split"] + [f"mse_{n}" for n in self.names] + ["winner"]

    def rows(self) -> list[list]:
        """One record per split; failed splits carry NaN errors and ``failed``."""
        return [[o.split, o.mse_a, o.mse_b, o.winner if not o.error else "failed"]
                for o in self.outcomes]

    def summary(self) -> str:
        a, b = self.names
        done = self.completed
        lines = [f"splits completed: {len(done)} / {len(self.outcomes)}"]
        for name in self.names:
            lines.append(f"{name} wins: {self.wins(name)}")
        ties = sum(o.winner == "tie" for o in done)
        if ties:
            lines.append(f"ties: {ties}")
        if done:
            lines.append(f"mean test MSE {a}: {np.mean([o.mse_a for o in done]):.6g}   "
                         f"{b}: {np.mean([o.mse_b for o in done]):.6g}")
        return "\n".join(lines)


def _mse(y: np.ndarray, pred: np.ndarray) -> float:
    resid = y - pred
    return float(resid @ resid) / len(y)


def compare_arms(ds: Dataset, target: str, arm_a: Arm, arm_b: Arm,
                 names: tuple = ("a", "b"), repeats: int = 100, train_frac: float = 0.7,
                 seed: int = 7, threads: Optional[int] = None) -> Comparison:
    """Score two fit/predict procedures on the same seeded splits."""
    splits = train_test_splits(ds, train_frac, repeats, seed)
    y = ds.column(target).values

    def one(item) -> SplitOutcome:
        r, (tr, te) = item
        try:
            train, test = ds.take(tr), ds.take(te)
            ma = _mse(y[te], arm_a(train, test))
            mb = _mse(y[te], arm_b(train, test))
        except (ArithmeticError, ValueError) as exc:
            logger.warning("split %d failed: %s", r, exc)
            return SplitOutcome(r, float("nan"), float("nan"), "", str(exc))
        winner = names[0] if ma < mb else names[1] if mb < ma else "tie"
        return SplitOutcome(r, ma, mb, winner)

    items = list(enumerate(splits))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, items))
    else:
        outcomes = [one(it) for it in items]
    return Comparison(tuple(names), outcomes)


def compare_predictions(ds: Dataset, target: str, config: Optional[SelectConfig] = None,
                        repeats: int = 100, train_frac: float = 0.7, seed: int = 7,
                        paper_mode: bool = False, grid_size: int = 100,
                        threads: Optional[int] = None) -> Comparison:
    """Best path (first arm) versus LASSO with CV-chosen lambda (second arm)."""
    config = config or SelectConfig()
    if paper_mode:
        report = select(ds, target, config)
        arm_a = ols_arm(target, report.mf_variables)
    else:
        arm_a = bestpath_arm(target, config)
    arm_b = lasso_arm(target, config.folds, config.seed, grid_size)
    return compare_arms(ds, target, arm_a, arm_b, ("bestpath", "lasso"), repeats, train_frac,
                        seed, threads)
