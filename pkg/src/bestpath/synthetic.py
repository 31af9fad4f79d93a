"""Seeded data generators with a known set of relevant regressors."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .dataset import Dataset


def linear_with_junk(n: int = 200, seed: int = 0, n_junk: int = 4, noise: float = 1.0) -> Dataset:
    """``y = 3 x1 - 2 x2 + noise`` plus ``n_junk`` independent columns ``x3, x4, ...``."""
    rng = np.random.default_rng(seed)
    cols = {"x1": rng.normal(size=n), "x2": rng.normal(size=n)}
    for j in range(n_junk):
        cols[f"x{j + 3}"] = rng.normal(size=n)
    cols["y"] = 3.0 * cols["x1"] - 2.0 * cols["x2"] + noise * rng.normal(size=n)
    return Dataset.from_frame(pd.DataFrame(cols), schema={k: "continuous" for k in cols})


def tree_structured(n: int = 150, seed: int = 0, chain: int = 4, n_junk: int = 3,
                    noise: float = 2.0, step: float = 1.0) -> Dataset:
    """Response driven by ``x1`` and ``x2`` only, with decoys hanging off them.

    Each true regressor heads a Markov chain of ``chain`` noisy copies
    (``a1, a2, ...`` from ``x1`` and ``b1, b2, ...`` from ``x2``, each link adding
    noise of sd ``step``), so the decoys are correlated with ``y`` but carry no
    information once ``x1`` and ``x2`` are known.  A binary factor ``z`` is a thresholded copy of ``b1``, and
    ``n_junk`` independent columns ``j1, j2, ...`` complete the table.
    """
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    cols = {"x1": x1, "x2": x2}
    for head, prefix in ((x1, "a"), (x2, "b")):
        prev = head
        for k in range(1, chain + 1):
            prev = prev + step * rng.normal(size=n)
            cols[f"{prefix}{k}"] = prev
    z = np.where(cols["b1"] + 0.5 * rng.normal(size=n) > 0, "hi", "lo")
    for k in range(1, n_junk + 1):
        cols[f"j{k}"] = rng.normal(size=n)
    cols["y"] = 2.0 * x1 - 1.5 * x2 + noise * rng.normal(size=n)
    frame = pd.DataFrame(cols)
    frame["z"] = z
    schema = {k: "continuous" for k in cols}
    schema["z"] = "discrete"
    return Dataset.from_frame(frame, schema=schema)
