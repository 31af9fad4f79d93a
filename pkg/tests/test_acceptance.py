"""End-to-end acceptance checks.

Each test records one PASS/FAIL line (shown in the terminal summary) and then
asserts.  Tolerances and sizes are fixed here, not tuned to the results.
"""

import csv
import math
import time

import numpy as np

from bestpath.cli import main as cli_main
from bestpath.compare import compare_predictions
from bestpath.dataset import load_hitters
from bestpath.forest import Edge, Forest, build_forest, forbidden_paths
from bestpath.lasso import kkt_violation, lambda_max, lasso_path
from bestpath.linmodel import INTERCEPT, fit_dataset, ols_fit
from bestpath.mi import mi_matrix
from bestpath.pathsteps import bfs_distances, mi_sum_profile, path_steps
from bestpath.selector import SelectConfig, check_containment, select
from bestpath.synthetic import linear_with_junk, tree_structured
from conftest import ACCEPTANCE_LINES, make_dataset
from oracles import (
    best_forest_weight, deviance_anova, deviance_contingency, deviance_gaussian,
    has_forbidden_path, path_nodes, random_tree,
)

REFERENCE_VARS = ["CRuns", "CWalks", "AtBat", "PutOuts", "Hits", "Walks"]
REFERENCE_COEF = {INTERCEPT: 41.83, "CRuns": 1.12, "CWalks": -0.70, "AtBat": -2.13,
               "PutOuts": 0.30, "Hits": 7.31, "Walks": 6.17}
HITTERS_SEEDS = (42, 43, 44, 45, 46)
SYNTH_SEEDS = (0, 1, 2, 3, 4)


def _record(n: int, ok: bool, text: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _random_mixed(rng, n, p):
    """Columns chained through a latent signal; roughly half are factors."""
    cols, discrete = {}, set()
    latent = rng.normal(size=n)
    for j in range(p):
        latent = rng.uniform(-1, 1) * latent + rng.normal(size=n)
        name = f"c{j}"
        if rng.random() < 0.5:
            levels = int(rng.integers(2, 5))
            cuts = np.quantile(latent, np.linspace(0, 1, levels + 1)[1:-1])
            cols[name] = np.array([f"L{k}" for k in np.searchsorted(cuts, latent)])
            discrete.add(name)
        else:
            cols[name] = latent.copy()
    return make_dataset(cols, discrete), discrete


def _oracle(ds, u, v, model):
    cu, cv = ds.columns[u], ds.columns[v]
    if cu.is_discrete and cv.is_discrete:
        return deviance_contingency(cu.values, cv.values)[0]
    if not cu.is_discrete and not cv.is_discrete:
        return deviance_gaussian(cu.values, cv.values)
    z, y = (cu.values, cv.values) if cu.is_discrete else (cv.values, cu.values)
    if len(np.unique(z)) == 1:
        return 0.0
    counts = np.unique(z, return_counts=True)[1]
    spread = min(np.var(y[z == lv]) for lv in np.unique(z))
    hetero = model == "heterogeneous" and counts.min() >= 2 and spread > 0
    return deviance_anova(z, y, hetero)[0]


class TestAcceptance:
    def test_1_mi_oracle_equivalence(self):
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        worst, checked = 0.0, 0
        for _ in range(500):
            n, p = int(rng.integers(8, 51)), int(rng.integers(2, 5))
            ds, _ = _random_mixed(rng, n, p)
            for model in ("homogeneous", "heterogeneous"):
                table = mi_matrix(ds, model)
                for u, v, est in table.pairs():
                    worst = max(worst, abs(est.deviance - _oracle(ds, u, v, model)))
                    checked += 1
        elapsed = time.perf_counter() - start
        ok = worst <= 1e-8 and elapsed < 10
        _record(1, ok, f"{checked} pairs over 500 datasets, max |2I - G| = {worst:.2e} "
                       f"(tol 1e-8), {elapsed:.1f}s (limit 10s)")
        assert ok

    def test_2_forest_optimality(self):
        rng = np.random.default_rng(99)
        start = time.perf_counter()
        gaps, violations = [], 0
        for i in range(200):
            p = int(rng.integers(2, 7))
            n = int(rng.integers(20, 60))
            ds, _ = _random_mixed(rng, n, p)
            penalty = "aic" if i % 2 else "bic"
            table = mi_matrix(ds)
            w = table.weights(penalty)
            if not np.all(np.isfinite(w[~np.eye(p, dtype=bool)])):
                continue
            f = build_forest(table, penalty)
            pairs = [(e.u, e.v) for e in f.edges]
            violations += bool(forbidden_paths(f)) + has_forbidden_path(p, pairs, f.discrete)
            gaps.append(abs(f.total_weight - best_forest_weight(w.tolist(), list(f.discrete))))
        elapsed = time.perf_counter() - start
        ok = len(gaps) >= 190 and max(gaps) <= 1e-9 and violations == 0 and elapsed < 30
        _record(2, ok, f"{len(gaps)} configurations, max weight gap {max(gaps):.1e}, "
                       f"{violations} forbidden-path violations, {elapsed:.1f}s (limit 30s)")
        assert ok

    def test_3_reference_ols(self, hitters):
        start = time.perf_counter()
        fit, _ = fit_dataset(hitters, "Salary", REFERENCE_VARS)
        elapsed = time.perf_counter() - start
        # printed to two decimals, so half a unit in the last place is also allowed
        misses = [name for name, value in REFERENCE_COEF.items()
                  if abs(fit.coef(name) - value) > max(0.01 * abs(value), 0.005)]
        ok = not misses and abs(fit.r2_adjusted - 0.486) <= 0.005 and elapsed < 1
        coefs = ", ".join(f"{k}={fit.coef(k):.4f}" for k in REFERENCE_COEF)
        _record(3, ok, f"{coefs}; adj R2 = {fit.r2_adjusted:.4f} (0.486 +/- 0.005); "
                       f"misses {misses or 'none'}; {elapsed:.2f}s")
        assert ok

    def test_4_hitters_pipeline(self, hitters):
        start = time.perf_counter()
        table = mi_matrix(hitters)
        rows = []
        for seed in HITTERS_SEEDS:
            r = select(hitters, "Salary", SelectConfig(seed=seed), table=table)
            s8 = r.step_scores[7] if len(r.step_scores) >= 8 else None
            rows.append((seed, r.path_steps.max_distance, r.best_step,
                         s8.cv_r2_adjusted if s8 else math.nan,
                         s8.cv.cv_r2_cor if s8 else math.nan,
                         set(r.mf_variables) == set(REFERENCE_VARS),
                         r.mf.r2_adjusted if r.mf else math.nan))
        elapsed = time.perf_counter() - start
        structure = all(d == 8 and b == 8 for _, d, b, *_ in rows)
        matches_reference = structure and all(row[5] for row in rows)
        r2_ok = all(abs(row[3] - 0.463) <= 0.03 for row in rows)
        ok = structure and r2_ok and elapsed < 30
        detail = "; ".join(f"seed {s}: dist {d}, best {b}, cv adj R2 {a:.4f}, cv cor2 {c:.4f}"
                           for s, d, b, a, c, *_ in rows)
        forest_note = ("forest has the reference structure (8 steps, reference final model), "
                       "so the strict clause applies" if matches_reference
                       else "forest differs from the reference structure")
        _record(4, ok, f"{detail}; target cv adj R2 0.463 +/- 0.03; {forest_note}; "
                       f"{elapsed:.1f}s")
        assert ok

    def test_5_lasso_correctness(self):
        rng = np.random.default_rng(5)
        start = time.perf_counter()
        worst_kkt = worst_ols = 0.0
        zeros_ok = True
        for _ in range(100):
            n, p = int(rng.integers(30, 101)), int(rng.integers(2, 11))
            X = rng.normal(size=(n, p)) * rng.uniform(0.5, 3, p) + rng.normal(size=p)
            y = X @ (rng.normal(size=p) * (rng.random(p) < 0.6)) + rng.normal(size=n)
            for fit in lasso_path(X, y):
                worst_kkt = max(worst_kkt, kkt_violation(fit, X, y))
            (zero,) = lasso_path(X, y, [0.0])
            ols = ols_fit(np.column_stack([np.ones(n), X]), y)
            worst_ols = max(worst_ols, np.max(np.abs(zero.coefficients - ols.coefficients[1:])),
                            abs(zero.intercept - ols.coefficients[0]))
            top = lambda_max(X, y)
            zeros_ok &= all(np.all(f.coefficients == 0.0)
                            for f in lasso_path(X, y, [2 * top, top]))
        elapsed = time.perf_counter() - start
        ok = worst_kkt <= 1e-6 and worst_ols <= 1e-5 and zeros_ok and elapsed < 20
        _record(5, ok, f"100 problems x 100 lambdas: max KKT violation {worst_kkt:.1e} (1e-6); "
                       f"lambda=0 vs OLS {worst_ols:.1e} (1e-5); exact zeros at "
                       f"lambda >= lambda_max: {zeros_ok}; {elapsed:.1f}s")
        assert ok

    def test_6_prediction_comparison(self, tmp_path, capsys):
        start = time.perf_counter()
        out = tmp_path / "results.csv"
        code = cli_main(["compare", "--input", "builtin:hitters", "--target", "Salary",
                         "--repeats", "100", "--seed", "7", "--out", str(out)])
        capsys.readouterr()
        rows = list(csv.DictReader(out.read_text().splitlines()))
        hitters_wins = sum(r["winner"] == "bestpath" for r in rows)
        failed = sum(r["winner"] == "failed" for r in rows)
        paper_mode = compare_predictions(load_hitters(), "Salary", paper_mode=True).wins("bestpath")
        synth = [compare_predictions(tree_structured(seed=g), "y").wins("bestpath")
                 for g in SYNTH_SEEDS]
        elapsed = time.perf_counter() - start
        hitters_ok = code == 0 and len(rows) == 100 and 50 <= hitters_wins <= 85
        synth_ok = float(np.mean(synth)) >= 60
        ok = hitters_ok and synth_ok and elapsed < 300
        _record(6, ok, f"Hitters: CSV with {len(rows)} splits ({failed} failed), best-path wins "
                       f"{hitters_wins}/100 (target [50, 85]; select-once reading gives "
                       f"{paper_mode}/100, information only); synthetic tree data: wins "
                       f"{synth} per generator seed, mean {np.mean(synth):.1f} (target >= 60); "
                       f"{elapsed:.0f}s (limit 300s)")
        assert ok

    def test_7_selection_containment(self, hitters):
        runs = []
        table = mi_matrix(hitters)
        for seed in HITTERS_SEEDS:
            runs.append(select(hitters, "Salary", SelectConfig(seed=seed), table=table))
        runs.append(select(hitters, "Salary", SelectConfig(penalty="aic")))
        runs.append(select(hitters, "Salary", SelectConfig(pruning="backward")))
        runs.append(select(hitters, "Salary", SelectConfig(variance_model="heterogeneous")))
        runs += [select(linear_with_junk(seed=s), "y") for s in range(20)]
        runs += [select(tree_structured(seed=s), "y") for s in SYNTH_SEEDS]
        errors = []
        for r in runs:
            try:
                check_containment(r)
            except AssertionError as exc:
                errors.append(str(exc))
        ok = not errors
        _record(7, ok, f"M_f <= M_w <= component and no p > alpha in M_f over {len(runs)} runs; "
                       f"{len(errors)} violations")
        assert ok

    def test_8_path_step_properties(self, hitters_report):
        rng = np.random.default_rng(8)
        start = time.perf_counter()
        bad = 0
        for _ in range(100):
            n = int(rng.integers(2, 51))
            pairs = random_tree(n, rng)
            f = Forest(tuple(f"v{i}" for i in range(n)), (False,) * n,
                       tuple(Edge(u, v, 1.0, 1.0) for u, v in pairs))
            target = int(rng.integers(0, n))
            adj = [[] for _ in range(n)]
            for u, v in pairs:
                adj[u].append(v)
                adj[v].append(u)
            dist = bfs_distances(f, target)
            bad += any(dist[j] != len(path_nodes(adj, target, j)) - 1 for j in range(n))
            ps = path_steps(f, target)
            bad += any(not set(a) < set(b) for a, b in zip(ps.steps, ps.steps[1:]))
            bad += set(ps.steps[-1]) != set(range(n)) - {target}
            mi = rng.exponential(size=(n, n))
            profile = mi_sum_profile(ps, (mi + mi.T) / 2)
            bad += any(b < a for a, b in zip(profile, profile[1:]))
        hitters_profile = [s.mi_sum for s in hitters_report.step_scores]
        bad += any(b < a for a, b in zip(hitters_profile, hitters_profile[1:]))
        elapsed = time.perf_counter() - start
        ok = bad == 0 and elapsed < 5
        _record(8, ok, f"100 random trees (n <= 50) plus Hitters: {bad} nesting, distance or "
                       f"monotonicity failures; {elapsed:.2f}s (limit 5s)")
        assert ok
