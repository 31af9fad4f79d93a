"""Pairwise mutual information for mixed discrete/continuous data.

All estimators return the *sample* mutual information scaled by the number of
observations, so that twice the value is the likelihood-ratio (deviance)
statistic for marginal independence of the pair:

* discrete/discrete: contingency table G statistic,
* continuous/continuous: bivariate Gaussian, ``-N/2 * ln(1 - r^2)``,
* discrete/continuous: one-way ANOVA with homogeneous or level-specific
  variances.

Perfectly dependent pairs get ``math.inf``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Optional

import numpy as np

from .dataset import Dataset

logger = logging.getLogger(__name__)

PENALTIES = ("aic", "bic")
PENALTY_STYLES = ("paper", "edwards")
VARIANCE_MODELS = ("homogeneous", "heterogeneous")

# 1 - r^2 (or s/s0) below this is treated as exact dependence.
DEPENDENCE_TOL = 1e-12


@dataclass(frozen=True)
class MIEstimate:
    """Mutual information of one variable pair.

    ``penalty_style="paper"`` uses ``I - 2k`` (AIC) and ``I - ln(N) k`` (BIC);
    ``"edwards"`` uses ``I - k`` and ``I - ln(N) k / 2``.
    """

    i_value: float
    dof: int
    n_obs: int
    kind_pair: str = ""
    penalty_style: str = "paper"
    degenerate: bool = False
    note: str = ""

    @property
    def deviance(self) -> float:
        return 2.0 * self.i_value

    @property
    def penalized_aic(self) -> float:
        scale = 2.0 if self.penalty_style == "paper" else 1.0
        return self.i_value - scale * self.dof

    @property
    def penalized_bic(self) -> float:
        scale = 1.0 if self.penalty_style == "paper" else 0.5
        return self.i_value - scale * math.log(self.n_obs) * self.dof

    def penalized(self, penalty: str) -> float:
        penalty = penalty.lower()
        if penalty == "aic":
            return self.penalized_aic
        if penalty == "bic":
            return self.penalized_bic
        raise ValueError(f"penalty must be one of {PENALTIES}, got {penalty!r}")


def _clamp(value: float) -> float:
    # MI is non-negative; tiny negatives are rounding.
    return value if value > 0.0 else 0.0


def _observed_codes(z: np.ndarray) -> tuple[np.ndarray, int]:
    """Recode to 0..L-1 over the levels that actually occur."""
    uniq, inv = np.unique(np.asarray(z), return_inverse=True)
    return inv.reshape(-1), len(uniq)


def mi_discrete_discrete(zu, zv, penalty_style: str = "paper") -> MIEstimate:
    """Contingency-table MI, ``sum n_uv ln(N n_uv / (n_u n_v))``.

    Degrees of freedom are ``(|Zu| - 1)(|Zv| - 1)`` over observed levels.
    """
    zu, zv = np.asarray(zu), np.asarray(zv)
    if zu.shape != zv.shape:
        raise ValueError("columns must have equal length")
    n = zu.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    cu, lu = _observed_codes(zu)
    cv, lv = _observed_codes(zv)
    dof = (lu - 1) * (lv - 1)
    if dof == 0:
        return MIEstimate(0.0, 0, n, "dd", penalty_style, True, "single-level column")
    table = np.zeros((lu, lv), dtype=np.float64)
    np.add.at(table, (cu, cv), 1.0)
    nu = table.sum(axis=1)
    nv = table.sum(axis=0)
    rows, cols = np.nonzero(table)
    cell = table[rows, cols]
    value = float(np.sum(cell * np.log(n * cell / (nu[rows] * nv[cols]))))
    return MIEstimate(_clamp(value), dof, n, "dd", penalty_style)


def mi_continuous_continuous(yu, yv, penalty_style: str = "paper") -> MIEstimate:
    """Gaussian MI ``-N/2 ln(1 - r^2)`` with r the Pearson correlation."""
    yu = np.asarray(yu, dtype=np.float64)
    yv = np.asarray(yv, dtype=np.float64)
    if yu.shape != yv.shape:
        raise ValueError("columns must have equal length")
    n = yu.shape[0]
    if n < 3:
        raise ValueError("need at least 3 observations")
    du = yu - yu.mean()
    dv = yv - yv.mean()
    suu, svv, suv = du @ du, dv @ dv, du @ dv
    if suu <= 0.0 or svv <= 0.0:
        raise ValueError("zero-variance column")
    one_minus_r2 = (suu * svv - suv * suv) / (suu * svv)
    if one_minus_r2 <= DEPENDENCE_TOL:
        return MIEstimate(math.inf, 1, n, "cc", penalty_style, True, "collinear pair")
    value = -0.5 * n * math.log(one_minus_r2)
    return MIEstimate(_clamp(value), 1, n, "cc", penalty_style)


def mi_mixed(zu, yv, variance_model: str = "homogeneous", penalty_style: str = "paper") -> MIEstimate:
    """ANOVA-based MI between a discrete and a continuous column.

    With ML variances ``s0`` (pooled about the grand mean), ``s_i`` (within
    level i) and ``s = sum n_i s_i / N``:

    * homogeneous: ``N/2 ln(s0/s)``, dof ``L - 1``;
    * heterogeneous: ``N/2 ln(s0) - 1/2 sum n_i ln(s_i)``, dof ``2(L - 1)``.

    The heterogeneous form needs every level to have ``n_i >= 2`` and
    ``s_i > 0``; otherwise the homogeneous estimate is returned with a note.
    """
    if variance_model not in VARIANCE_MODELS:
        raise ValueError(f"variance_model must be one of {VARIANCE_MODELS}")
    zu = np.asarray(zu)
    yv = np.asarray(yv, dtype=np.float64)
    if zu.shape != yv.shape:
        raise ValueError("columns must have equal length")
    n = yv.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    codes, levels = _observed_codes(zu)
    counts = np.bincount(codes, minlength=levels).astype(np.float64)
    sums = np.bincount(codes, weights=yv, minlength=levels)
    means = sums / counts
    resid = yv - means[codes]
    within = np.bincount(codes, weights=resid * resid, minlength=levels)  # n_i * s_i
    dev0 = yv - yv.mean()
    s0 = float(dev0 @ dev0) / n
    s = float(within.sum()) / n
    if s0 <= 0.0:
        raise ValueError("zero-variance column")
    if levels == 1:
        return MIEstimate(0.0, 0, n, "dc", penalty_style, True, "single-level column")

    note = ""
    if variance_model == "heterogeneous":
        s_i = within / counts
        if np.all(counts >= 2) and np.all(s_i > DEPENDENCE_TOL * s0):
            value = 0.5 * n * math.log(s0) - 0.5 * float(np.sum(counts * np.log(s_i)))
            return MIEstimate(_clamp(value), 2 * (levels - 1), n, "dc", penalty_style)
        note = "heterogeneous model not estimable; homogeneous fallback"
        logger.debug(note)

    if s <= DEPENDENCE_TOL * s0:
        return MIEstimate(math.inf, levels - 1, n, "dc", penalty_style, True,
                          note or "zero within-level variance")
    value = 0.5 * n * math.log(s0 / s)
    return MIEstimate(_clamp(value), levels - 1, n, "dc", penalty_style, False, note)


def mi_pair(ds: Dataset, u: int, v: int, variance_model: str = "homogeneous",
            penalty_style: str = "paper") -> MIEstimate:
    """Dispatch on the kinds of columns ``u`` and ``v``."""
    cu, cv = ds.columns[u], ds.columns[v]
    if cu.is_discrete and cv.is_discrete:
        return mi_discrete_discrete(cu.values, cv.values, penalty_style)
    if not cu.is_discrete and not cv.is_discrete:
        return mi_continuous_continuous(cu.values, cv.values, penalty_style)
    if cu.is_discrete:
        return mi_mixed(cu.values, cv.values, variance_model, penalty_style)
    return mi_mixed(cv.values, cu.values, variance_model, penalty_style)


class MITable:
    """Symmetric table of :class:`MIEstimate` over all column pairs."""

    def __init__(self, names: list[str], discrete: np.ndarray, n_obs: int,
                 estimates: dict[tuple[int, int], MIEstimate]):
        self.names = list(names)
        self.discrete = np.asarray(discrete, dtype=bool)
        self.n_obs = n_obs
        self._est = dict(estimates)

    @property
    def p(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self._est)

    def __getitem__(self, key: tuple[int, int]) -> MIEstimate:
        u, v = key
        if u == v:
            raise KeyError("the diagonal is undefined")
        return self._est[(u, v) if u < v else (v, u)]

    def pairs(self) -> Iterator[tuple[int, int, MIEstimate]]:
        for (u, v) in sorted(self._est):
            yield u, v, self._est[(u, v)]

    def raw(self) -> np.ndarray:
        """p x p matrix of unpenalized MI (zero diagonal)."""
        out = np.zeros((self.p, self.p))
        for u, v, est in self.pairs():
            out[u, v] = out[v, u] = est.i_value
        return out

    def weights(self, penalty: str) -> np.ndarray:
        """p x p matrix of penalized MI (``-inf`` diagonal)."""
        out = np.full((self.p, self.p), -np.inf)
        for u, v, est in self.pairs():
            out[u, v] = out[v, u] = est.penalized(penalty)
        return out

    def rows(self, penalty: str) -> list[dict]:
        """Records for the CSV dump: ``u,v,kind_pair,i,dof,penalized``."""
        return [
            {"u": self.names[u], "v": self.names[v], "kind_pair": est.kind_pair,
             "i": est.i_value, "dof": est.dof, "penalized": est.penalized(penalty)}
            for u, v, est in self.pairs()
        ]


def mi_matrix(ds: Dataset, variance_model: str = "homogeneous", penalty_style: str = "paper",
              threads: Optional[int] = None) -> MITable:
    """Mutual information for every unordered column pair of ``ds``.

    Pairs may be computed on a thread pool; results are stored by pair index
    so the table does not depend on completion order.
    """
    if penalty_style not in PENALTY_STYLES:
        raise ValueError(f"penalty_style must be one of {PENALTY_STYLES}")
    pairs = list(combinations(range(ds.p), 2))

    def one(pair):
        return mi_pair(ds, pair[0], pair[1], variance_model, penalty_style)

    if threads and threads > 1 and len(pairs) > 64:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, pairs))
    else:
        results = [one(pair) for pair in pairs]
    return MITable(ds.names, ds.discrete_mask, ds.n_rows, dict(zip(pairs, results)))
