"""The best path algorithm.

0. learn the minimal AIC/BIC forest of the whole dataset;
1. collect the path steps around the target;
2. cross-validate an OLS model on every path step;
3. keep the step with the largest cross-validated adjusted R^2 (``M_w``);
4. drop insignificant regressors from ``M_w`` to get the final model ``M_f``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .crossval import CVResult, FoldFailure, kfold_cv
from .dataset import DataError, Dataset
from .forest import Forest, build_forest
from .linmodel import DesignSpec, ModelFit, SingularDesignError, fit_dataset, group_p_values
from .mi import MITable, mi_matrix
from .pathsteps import PathSteps, mi_sum_profile, path_steps

logger = logging.getLogger(__name__)

NO_CANDIDATES = "no candidates in target's tree"
PRUNING_MODES = ("batch", "backward")
# Slack for the diagnostic R^2 comparison between consecutive steps.
R2_STEP_SLACK = 0.02


class SelectionError(ArithmeticError):
    """Every path step failed to produce a usable fit."""


@dataclass(frozen=True)
class SelectConfig:
    penalty: str = "bic"
    penalty_style: str = "paper"
    variance_model: str = "homogeneous"
    folds: int = 10
    seed: int = 42
    alpha: float = 0.1
    pruning: str = "batch"
    plateau_tol: float = 0.05
    threads: Optional[int] = None

    def __post_init__(self):
        if self.pruning not in PRUNING_MODES:
            raise ValueError(f"pruning must be one of {PRUNING_MODES}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class StepScore:
    k: int
    variables: tuple
    mi_sum: float
    cv: Optional[CVResult] = None
    r2_adjusted_full: Optional[float] = None
    failed: bool = False
    reason: str = ""

    @property
    def cv_r2_adjusted(self) -> float:
        return self.cv.cv_r2_adjusted if self.cv else math.nan

    @property
    def cv_mse(self) -> float:
        return self.cv.cv_mse if self.cv else math.nan


@dataclass
class SelectionReport:
    target: str
    config: SelectConfig
    forest: Forest
    mi_table: MITable
    path_steps: PathSteps
    step_scores: list = field(default_factory=list)
    best_step: Optional[int] = None
    plateau_step: Optional[int] = None
    mw: Optional[ModelFit] = None
    mw_variables: tuple = ()
    mf: Optional[ModelFit] = None
    mf_variables: tuple = ()
    mf_spec: Optional[DesignSpec] = None
    pruning_trace: list = field(default_factory=list)
    status: str = "ok"
    diagnostics: list = field(default_factory=list)

    @property
    def component(self) -> list[str]:
        t = self.forest.names.index(self.target)
        return [self.forest.names[j] for j in self.forest.component_of(t)]

    def to_dict(self) -> dict:
        names = self.forest.names
        return {
            "schema_version": 1,
            "target": self.target,
            "status": self.status,
            "config": asdict(self.config),
            "forest": self.forest.to_dict(),
            "path_steps": [
                {"k": s.k, "vars": list(s.variables), "mi_sum": s.mi_sum}
                for s in self.step_scores
            ],
            "step_scores": [
                {"k": s.k, "n_vars": len(s.variables), "failed": s.failed, "reason": s.reason,
                 "cv_mse": s.cv_mse, "cv_r2_adjusted": s.cv_r2_adjusted,
                 "cv_rmse": s.cv.cv_rmse if s.cv else math.nan,
                 "cv_r2_cor": s.cv.cv_r2_cor if s.cv else math.nan,
                 "r2_adjusted_full": s.r2_adjusted_full}
                for s in self.step_scores
            ],
            "max_distance": len(self.path_steps),
            "distances": {names[j]: d for j, d in enumerate(self.path_steps.distances)
                          if d is not None},
            "best_step": self.best_step,
            "plateau_step": self.plateau_step,
            "alpha": self.config.alpha,
            "mw": _fit_dict(self.mw, self.mw_variables),
            "mf": _fit_dict(self.mf, self.mf_variables),
            "pruning_trace": [list(r) for r in self.pruning_trace],
            "diagnostics": list(self.diagnostics),
        }

    def summary(self) -> str:
        lines = [f"target: {self.target}   status: {self.status}"]
        if not self.step_scores:
            return "\n".join(lines)
        lines.append(f"{'step':>4} {'vars':>5} {'MI sum':>12} {'CV MSE':>14} {'CV adj R2':>10}")
        for s in self.step_scores:
            mark = " *" if s.k == self.best_step else ""
            if s.failed:
                lines.append(f"{s.k:>4} {len(s.variables):>5} {s.mi_sum:>12.3f}   failed: {s.reason}")
            else:
                lines.append(f"{s.k:>4} {len(s.variables):>5} {s.mi_sum:>12.3f} "
                             f"{s.cv_mse:>14.6g} {s.cv_r2_adjusted:>10.4f}{mark}")
        lines.append(f"best path step: {self.best_step}   MI plateau step: {self.plateau_step}")
        if self.mf is not None:
            lines.append("final model:")
            lines.append(self.mf.summary())
        return "\n".join(lines)


def _fit_dict(fit: Optional[ModelFit], variables: Sequence[str]) -> Optional[dict]:
    if fit is None:
        return None
    return {"variables": list(variables), "r2_adjusted": fit.r2_adjusted, "mse": fit.mse,
            "n_obs": fit.n_obs, "o": fit.o, "coefficients": fit.table()}


def mi_plateau_diagnostic(profile: Sequence[float], tol: float = 0.05) -> int:
    """Smallest step whose MI sum is within ``tol`` (relative) of the final sum.

    Reported next to the cross-validated choice; it never overrides it.
    """
    if not profile:
        raise ValueError("empty profile")
    total = profile[-1]
    if math.isinf(total):
        return next(k for k, s in enumerate(profile, start=1) if math.isinf(s))
    if total <= 0.0:
        return 1
    for k, s in enumerate(profile, start=1):
        if (total - s) / total < tol:
            return k
    return len(profile)


def prune(ds: Dataset, target: str, variables: Sequence[str], alpha: float = 0.1,
          mode: str = "batch") -> tuple[ModelFit, DesignSpec, list[str], list[list[str]]]:
    """Remove regressors with p-value above ``alpha`` until none is left.

    ``"batch"`` drops every insignificant regressor at once, refits, and
    repeats.  ``"backward"`` drops only the least significant one per round.
    A factor's dummies are kept or dropped together, judged by their smallest
    p-value.

    Returns the final fit, its design, the surviving variables and the list of
    variables removed in each round.
    """
    if mode not in PRUNING_MODES:
        raise ValueError(f"mode must be one of {PRUNING_MODES}")
    current = list(variables)
    trace: list[list[str]] = []
    for _ in range(len(current) + 1):
        fit, spec = fit_dataset(ds, target, current)
        pvals = group_p_values(fit, spec)
        weak = [v for v in current if pvals[v] > alpha]
        if not weak:
            return fit, spec, current, trace
        if mode == "backward":
            worst = max(pvals[v] for v in weak)
            weak = [[v for v in weak if pvals[v] == worst][-1]]
        trace.append(weak)
        current = [v for v in current if v not in weak]
    raise AssertionError("pruning did not terminate")


def select(ds: Dataset, target: str, config: Optional[SelectConfig] = None,
           table: Optional[MITable] = None) -> SelectionReport:
    """Run the best path algorithm for ``target``.

    ``table`` may be passed to reuse a precomputed mutual information table.
    """
    config = config or SelectConfig()
    if target not in ds:
        raise DataError(f"unknown target column {target!r}")
    t = ds.index(target)
    if ds.column(t).is_discrete:
        raise DataError(f"target column {target!r} is discrete; a continuous target is required")

    # Step 0
    if table is None:
        table = mi_matrix(ds, config.variance_model, config.penalty_style, config.threads)
    forest = build_forest(table, config.penalty)
    # Step 1
    ps = path_steps(forest, t)
    report = SelectionReport(target, config, forest, table, ps)
    if not ps.steps:
        report.status = NO_CANDIDATES
        logger.info("%s: %s", target, NO_CANDIDATES)
        return report
    profile = mi_sum_profile(ps, table.raw())
    report.plateau_step = mi_plateau_diagnostic(profile, config.plateau_tol)

    # Step 2
    def score(k: int) -> StepScore:
        names = tuple(ds.names[j] for j in ps.steps[k - 1])
        try:
            cv = kfold_cv(ds, target, names, config.folds, config.seed)
        except FoldFailure as exc:
            logger.warning("path step %d skipped: %s", k, exc)
            return StepScore(k, names, profile[k - 1], failed=True, reason=str(exc))
        try:
            full = fit_dataset(ds, target, names)[0].r2_adjusted
        except SingularDesignError:
            full = None
        return StepScore(k, names, profile[k - 1], cv, full)

    ks = range(1, len(ps) + 1)
    if config.threads and config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            report.step_scores = list(pool.map(score, ks))
    else:
        report.step_scores = [score(k) for k in ks]

    # Step 3: strict improvement only, so ties keep the smaller step
    best: Optional[StepScore] = None
    for s in report.step_scores:
        if s.failed or not np.isfinite(s.cv_r2_adjusted):
            continue
        if best is None or s.cv_r2_adjusted > best.cv_r2_adjusted:
            best = s
    if best is None:
        raise SelectionError(f"every path step failed for target {target!r}")
    report.best_step = best.k
    _check_r2_step(report)

    # Step 4
    try:
        mw, _ = fit_dataset(ds, target, best.variables)
        mf, mf_spec, kept, trace = prune(ds, target, best.variables, config.alpha, config.pruning)
    except SingularDesignError as exc:
        raise SelectionError(f"path step {best.k} cannot be fitted on the full data: {exc}") from exc
    report.mw, report.mw_variables = mw, tuple(best.variables)
    report.mf, report.mf_variables, report.mf_spec = mf, tuple(kept), mf_spec
    report.pruning_trace = trace
    check_containment(report)
    return report


def _check_r2_step(report: SelectionReport) -> None:
    i = report.best_step
    if i is None or i < 2:
        return
    cur, prev = report.step_scores[i - 1], report.step_scores[i - 2]
    if cur.r2_adjusted_full is None or prev.r2_adjusted_full is None:
        return
    if cur.r2_adjusted_full < prev.r2_adjusted_full - R2_STEP_SLACK:
        msg = (f"full-data adjusted R2 drops from {prev.r2_adjusted_full:.4f} (step {i - 1}) "
               f"to {cur.r2_adjusted_full:.4f} (best step {i})")
        logger.info(msg)
        report.diagnostics.append(msg)


def check_containment(report: SelectionReport) -> None:
    """Assert ``M_f <= M_w <= component(target)`` and no p-value above alpha in ``M_f``."""
    comp = set(report.component) - {report.target}
    mw, mf = set(report.mw_variables), set(report.mf_variables)
    if not mf <= mw:
        raise AssertionError(f"final variables {sorted(mf - mw)} are not in the best step")
    if not mw <= comp:
        raise AssertionError(f"best-step variables {sorted(mw - comp)} lie outside the target's tree")
    if report.mf is not None and report.mf_spec is not None:
        pvals = group_p_values(report.mf, report.mf_spec)
        weak = {v: p for v, p in pvals.items() if p > report.config.alpha}
        if weak:
            raise AssertionError(f"final model keeps insignificant regressors: {weak}")
