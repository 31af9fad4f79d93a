"""Tabular input: CSV ingestion, column typing and cleaning.

Every downstream module works on a :class:`Dataset`, an immutable table whose
columns are either *discrete* (integer codes into an ordered list of level
labels) or *continuous* (float64).
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "NA", "?"})
DEFAULT_MAX_LEVELS = 10

PathLike = Union[str, Path]


class DataError(ValueError):
    """Raised when input data cannot be turned into a valid Dataset."""


@dataclass(frozen=True)
class VariableKind:
    """Discrete (with ordered level labels) or continuous.

    ``levels is None`` marks a continuous variable.
    """

    levels: Optional[tuple] = None

    def __post_init__(self):
        if self.levels is not None:
            if len(self.levels) == 0:
                raise ValueError("a discrete variable needs at least one level")
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"duplicate levels: {self.levels!r}")

    @classmethod
    def discrete(cls, levels: Iterable) -> "VariableKind":
        return cls(tuple(levels))

    @classmethod
    def continuous(cls) -> "VariableKind":
        return cls(None)

    @property
    def is_discrete(self) -> bool:
        return self.levels is not None

    @property
    def tag(self) -> str:
        return "discrete" if self.is_discrete else "continuous"

    @property
    def n_levels(self) -> int:
        return len(self.levels) if self.levels is not None else 0

    def encode(self, labels: Iterable) -> np.ndarray:
        if self.levels is None:
            raise TypeError("continuous variables have no level coding")
        lookup = {lv: i for i, lv in enumerate(self.levels)}
        try:
            return np.fromiter((lookup[x] for x in labels), dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"unknown level {exc.args[0]!r}") from None

    def decode(self, codes: Iterable[int]) -> list:
        if self.levels is None:
            raise TypeError("continuous variables have no level coding")
        return [self.levels[int(c)] for c in codes]


@dataclass(frozen=True)
class Column:
    name: str
    kind: VariableKind
    values: np.ndarray

    @property
    def is_discrete(self) -> bool:
        return self.kind.is_discrete

    def labels(self) -> list:
        """Values as they would be written back to CSV."""
        if self.is_discrete:
            return self.kind.decode(self.values)
        return self.values.tolist()


@dataclass(frozen=True)
class Dataset:
    """Immutable column-typed table with no missing values.

    Discrete columns hold int64 codes in ``[0, n_levels)``; continuous columns
    hold float64.  Arrays are flagged read-only so instances can be shared
    between workers.
    """

    columns: tuple
    n_rows: int = field(init=False)

    def __post_init__(self):
        cols = tuple(self.columns)
        if len(cols) < 2:
            raise DataError(f"need at least 2 columns, got {len(cols)}")
        names = [c.name for c in cols]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DataError(f"duplicate column names: {dupes}")
        n = len(cols[0].values)
        fixed = []
        for c in cols:
            if len(c.values) != n:
                raise DataError(f"column {c.name!r} has {len(c.values)} rows, expected {n}")
            if c.is_discrete:
                vals = np.asarray(c.values, dtype=np.int64)
                if n and (vals.min() < 0 or vals.max() >= c.kind.n_levels):
                    raise DataError(f"column {c.name!r} has codes outside its level range")
            else:
                vals = np.asarray(c.values, dtype=np.float64)
                if not np.all(np.isfinite(vals)):
                    raise DataError(f"column {c.name!r} has non-finite values")
            vals = vals.copy()
            vals.setflags(write=False)
            fixed.append(Column(c.name, c.kind, vals))
        if n < 3:
            raise DataError(f"need at least 3 rows, got {n}")
        object.__setattr__(self, "columns", tuple(fixed))
        object.__setattr__(self, "n_rows", n)

    # -- access -----------------------------------------------------------
    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def p(self) -> int:
        return len(self.columns)

    @property
    def kinds(self) -> list[VariableKind]:
        return [c.kind for c in self.columns]

    @property
    def discrete_mask(self) -> np.ndarray:
        return np.array([c.is_discrete for c in self.columns], dtype=bool)

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(f"no column named {name!r}")

    def column(self, key: Union[int, str]) -> Column:
        if isinstance(key, str):
            key = self.index(key)
        return self.columns[key]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def take(self, rows: Sequence[int]) -> "Dataset":
        """Row subset; level lists are kept, so codes stay comparable."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(tuple(Column(c.name, c.kind, c.values[rows]) for c in self.columns))

    def select(self, names: Sequence[str]) -> "Dataset":
        return Dataset(tuple(self.column(n) for n in names))

    # -- conversion -------------------------------------------------------
    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({c.name: c.labels() for c in self.columns})

    def schema(self) -> dict[str, str]:
        return {c.name: c.kind.tag for c in self.columns}

    def to_csv(self, path: PathLike) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            cols = [c.labels() for c in self.columns]
            for row in zip(*cols):
                writer.writerow([_format_cell(v) for v in row])

    @classmethod
    def from_frame(
        cls,
        df: pd.DataFrame,
        schema: Optional[Mapping[str, str]] = None,
        max_levels: int = DEFAULT_MAX_LEVELS,
        drop_constant: bool = True,
    ) -> "Dataset":
        """Type and validate an in-memory frame that has no missing values."""
        schema = _check_schema(schema, list(df.columns))
        cols = []
        for name in df.columns:
            raw = df[name].tolist()
            col = _typed_column(str(name), raw, schema.get(name), max_levels)
            if drop_constant and _is_constant(col):
                logger.warning("dropping constant column %r", name)
                continue
            cols.append(col)
        return cls(tuple(cols))


def _format_cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _is_constant(col: Column) -> bool:
    vals = col.values
    return len(vals) == 0 or bool(np.all(vals == vals[0]))


# -- type inference ---------------------------------------------------------

def _as_number(x: Any) -> Optional[float]:
    if isinstance(x, bool):
        return None
    if isinstance(x, (int, float, np.integer, np.floating)):
        return float(x)
    try:
        return float(str(x).strip())
    except ValueError:
        return None


def _numeric(values: Sequence) -> Optional[np.ndarray]:
    out = np.empty(len(values), dtype=np.float64)
    for i, v in enumerate(values):
        num = _as_number(v)
        if num is None or not math.isfinite(num):
            return None
        out[i] = num
    return out


def _first_appearance(values: Iterable) -> list:
    return list(dict.fromkeys(values))


def _numeric_labels(nums: np.ndarray) -> list:
    if np.all(nums == np.round(nums)):
        return [int(v) for v in nums]
    return [float(v) for v in nums]


def infer_kind(values: Sequence, max_levels: int = DEFAULT_MAX_LEVELS) -> VariableKind:
    """Classify a raw column.

    Non-numeric values give a discrete kind whose levels are the distinct raw
    values in first-appearance order.  Numeric values are discrete only if all
    are integral and there are at most ``max_levels`` of them.
    """
    if len(values) == 0:
        raise ValueError("cannot infer the kind of an empty column")
    nums = _numeric(values)
    if nums is None:
        return VariableKind.discrete(_first_appearance(str(v).strip() for v in values))
    integral = bool(np.all(nums == np.round(nums)))
    if integral and len(np.unique(nums)) <= max_levels:
        return VariableKind.discrete(_first_appearance(_numeric_labels(nums)))
    return VariableKind.continuous()


def _typed_column(name: str, raw: Sequence, override: Optional[str], max_levels: int) -> Column:
    nums = _numeric(raw)
    if override is None:
        kind = infer_kind(raw, max_levels)
    elif override == "continuous":
        if nums is None:
            raise DataError(f"column {name!r} is declared continuous but has non-numeric values")
        kind = VariableKind.continuous()
    else:
        labels = _numeric_labels(nums) if nums is not None else [str(v).strip() for v in raw]
        kind = VariableKind.discrete(_first_appearance(labels))

    if not kind.is_discrete:
        return Column(name, kind, nums)
    labels = _numeric_labels(nums) if nums is not None else [str(v).strip() for v in raw]
    return Column(name, kind, kind.encode(labels))


# -- schema -----------------------------------------------------------------

_KINDS = ("discrete", "continuous")


def read_schema(path: PathLike) -> dict[str, str]:
    """Read ``name,kind`` lines (kind is ``discrete`` or ``continuous``).

    Blank lines and lines starting with ``#`` are ignored.
    """
    out: dict[str, str] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 'name,kind', got {row!r}")
            name, kind = row[0].strip(), row[1].strip().lower()
            if kind not in _KINDS:
                raise DataError(f"{path}:{lineno}: kind must be one of {_KINDS}, got {kind!r}")
            out[name] = kind
    return out


def _check_schema(schema: Optional[Mapping[str, str]], header: list) -> dict[str, str]:
    if not schema:
        return {}
    missing = [n for n in schema if n not in header]
    if missing:
        raise DataError(f"schema names columns absent from the data: {missing}")
    bad = {n: k for n, k in schema.items() if k not in _KINDS}
    if bad:
        raise DataError(f"schema kinds must be one of {_KINDS}: {bad}")
    return dict(schema)


# -- CSV --------------------------------------------------------------------

def load_csv(
    path: PathLike,
    schema: Optional[Union[Mapping[str, str], PathLike]] = None,
    missing_col_frac: float = 0.5,
    missing_row_policy: str = "drop",
    max_levels: int = DEFAULT_MAX_LEVELS,
) -> Dataset:
    """Load and clean a CSV file.

    Missing cells are empty, ``NA`` or ``?``.  Columns whose missing fraction
    exceeds ``missing_col_frac`` are dropped first; rows that still contain a
    missing cell are dropped afterwards.  Constant columns are then dropped
    with a warning.

    Parameters
    ----------
    path : str or Path
        CSV file with a header row.
    schema : mapping or path, optional
        Per-column ``"discrete"``/``"continuous"`` overrides, or a schema file
        for :func:`read_schema`.
    missing_col_frac : float
        Column-drop threshold (strictly greater than drops).
    missing_row_policy : {"drop"}
        Only listwise deletion is supported.
    max_levels : int
        Passed to :func:`infer_kind`.
    """
    if missing_row_policy != "drop":
        raise ValueError(f"unsupported missing_row_policy {missing_row_policy!r}")
    if not 0.0 <= missing_col_frac <= 1.0:
        raise ValueError("missing_col_frac must lie in [0, 1]")
    path = Path(path)
    if isinstance(schema, (str, Path)):
        schema = read_schema(schema)

    try:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), None)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not header:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in header]
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise DataError(f"duplicate header names in {path}: {dupes}")
    schema = _check_schema(schema, header)

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False,
                         skipinitialspace=False)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    df.columns = header
    df = df.apply(lambda s: s.str.strip())
    missing = df.isin(MISSING_TOKENS)

    if len(df) == 0:
        raise DataError(f"{path} has no data rows")
    frac = missing.mean(axis=0)
    dropped = [c for c in df.columns if frac[c] > missing_col_frac]
    for c in dropped:
        logger.warning("dropping column %r: %.1f%% missing", c, 100 * frac[c])
    keep_cols = [c for c in df.columns if c not in dropped]
    df, missing = df[keep_cols], missing[keep_cols]

    row_ok = ~missing.any(axis=1)
    if (~row_ok).any():
        logger.info("dropping %d rows with missing values", int((~row_ok).sum()))
    df = df[row_ok].reset_index(drop=True)
    if len(df) == 0 or not keep_cols:
        raise DataError(f"{path}: no data left after removing missing values")

    schema = {k: v for k, v in schema.items() if k in keep_cols}
    return Dataset.from_frame(df, schema=schema, max_levels=max_levels)


def builtin_path(name: str) -> Path:
    """Path of a CSV shipped with the package (currently ``hitters``)."""
    p = Path(__file__).parent / "data" / f"{name.lower()}.csv"
    if not p.exists():
        raise DataError(f"no builtin dataset named {name!r}")
    return p


def load_hitters() -> Dataset:
    """Baseball salary data, listwise-deleted on missing Salary (263 x 20)."""
    return load_csv(builtin_path("hitters"))
