"""Command line interface: ``bestpath {mi,forest,select,compare}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .compare import compare_predictions
from .dataset import DataError, Dataset, builtin_path, load_csv
from .forest import build_forest, export_dot
from .linmodel import SingularDesignError
from .mi import mi_matrix
from .selector import SelectConfig, SelectionError, select

logger = logging.getLogger("bestpath")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
BUILTIN_PREFIX = "builtin:"
_UMASK = os.umask(0)
os.umask(_UMASK)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- output helpers -------------------------------------------------------------------

def to_json(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON: keys in insertion order, floats with 17 significant digits.

    NaN becomes ``null`` and infinities the strings ``"inf"`` / ``"-inf"``.
    """
    out = io.StringIO()
    _emit(obj, out, indent, 0)
    out.write("\n")
    return out.getvalue()


def _scalar(x: Any) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _emit(obj: Any, out: io.StringIO, indent: int, level: int) -> None:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.write(f"{inner}{_scalar(str(k))}: ")
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.write("[]")
            return
        out.write("[\n")
        for i, v in enumerate(items):
            out.write(inner)
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(items) - 1 else "\n")
        out.write(pad + "]")
    else:
        out.write(_scalar(obj))


def write_atomic(path: os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(x) for x in r])
    return buf.getvalue()


def _csv_cell(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "inf" if x == math.inf else "-inf" if x == -math.inf else (
            "nan" if math.isnan(x) else format(x, ".17g"))
    return str(x)


# -- argument parsing -----------------------------------------------------------------

def _common(p: argparse.ArgumentParser, target: bool) -> None:
    p.add_argument("--input", required=True,
                   help=f"CSV file, or {BUILTIN_PREFIX}hitters for the bundled data")
    p.add_argument("--schema", help="CSV with columns name,kind (discrete|continuous)")
    p.add_argument("--missing-col-frac", type=float, default=0.5,
                   help="drop columns whose missing fraction exceeds this (default 0.5)")
    if target:
        p.add_argument("--target", required=True, help="continuous response column")
    p.add_argument("--penalty", choices=("aic", "bic"), default="bic")
    p.add_argument("--penalty-style", choices=("paper", "edwards"), default="paper")
    p.add_argument("--variance-model", choices=("homogeneous", "heterogeneous"),
                   default="homogeneous")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
    p.add_argument("--manifest", help="manifest path (default: next to the first output)")
    p.add_argument("-v", "--verbose", action="store_true")


def _selection_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--pruning", choices=("batch", "backward"), default="batch")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bestpath", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mi", help="pairwise mutual information table")
    _common(p, target=False)
    p.add_argument("--out", help="CSV output (default: standard output)")

    p = sub.add_parser("forest", help="minimal AIC/BIC forest")
    _common(p, target=False)
    p.add_argument("--json", help="forest JSON output")
    p.add_argument("--dot", help="Graphviz output")

    p = sub.add_parser("select", help="best path variable selection")
    _common(p, target=True)
    _selection_flags(p)
    p.add_argument("--seed", type=int, default=42, help="cross-validation fold seed")
    p.add_argument("--json", help="report JSON output")
    p.add_argument("--dot", help="Graphviz output of the forest with the target marked")

    p = sub.add_parser("compare", help="test-set comparison with cross-validated LASSO")
    _common(p, target=True)
    _selection_flags(p)
    p.add_argument("--seed", type=int, default=7, help="train/test split seed")
    p.add_argument("--cv-seed", type=int, default=42, help="cross-validation fold seed")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--paper-mode", action="store_true",
                   help="select once on all rows, then only refit per split")
    p.add_argument("--out", help="per-split CSV output")
    return parser


# -- commands -------------------------------------------------------------------------

def _load(args) -> tuple[Dataset, str]:
    src = args.input
    path = builtin_path(src[len(BUILTIN_PREFIX):]) if src.startswith(BUILTIN_PREFIX) else Path(src)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    ds = load_csv(path, schema=args.schema, missing_col_frac=args.missing_col_frac)
    return ds, digest


def _config(args) -> SelectConfig:
    seed = args.cv_seed if args.command == "compare" else args.seed
    try:
        return SelectConfig(penalty=args.penalty, penalty_style=args.penalty_style,
                            variance_model=args.variance_model, folds=args.folds, seed=seed,
                            alpha=args.alpha, pruning=args.pruning, threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_mi(args, ds: Dataset) -> list[Path]:
    table = mi_matrix(ds, args.variance_model, args.penalty_style, args.threads)
    rows = table.rows(args.penalty)
    header = ["u", "v", "kind_pair", "i", "dof", "penalized"]
    text = _csv_text(header, [[r[h] for h in header] for r in rows])
    if not args.out:
        sys.stdout.write(text)
        return []
    write_atomic(args.out, text)
    top = sorted(rows, key=lambda r: -r["penalized"])[:10]
    print(f"{len(rows)} pairs written to {args.out}; strongest by penalized {args.penalty}:")
    for r in top:
        print(f"  {r['u']:>12} {r['v']:<12} I={r['i']:.4g} dof={r['dof']} pen={r['penalized']:.4g}")
    return [Path(args.out)]


def _cmd_forest(args, ds: Dataset) -> list[Path]:
    table = mi_matrix(ds, args.variance_model, args.penalty_style, args.threads)
    forest = build_forest(table, args.penalty)
    written = []
    if args.json:
        write_atomic(args.json, to_json(forest.to_dict()))
        written.append(Path(args.json))
    if args.dot:
        write_atomic(args.dot, export_dot(forest))
        written.append(Path(args.dot))
    print(f"{len(forest.edges)} edges, {len(forest.components())} components")
    for e in forest.edges:
        print(f"  {forest.names[e.u]:>12} -- {forest.names[e.v]:<12} {e.weight:.4g}")
    return written


def _cmd_select(args, ds: Dataset) -> list[Path]:
    report = select(ds, args.target, _config(args))
    written = []
    if args.json:
        write_atomic(args.json, to_json(report.to_dict()))
        written.append(Path(args.json))
    if args.dot:
        write_atomic(args.dot, export_dot(report.forest, target=ds.index(args.target)))
        written.append(Path(args.dot))
    print(report.summary())
    return written


def _cmd_compare(args, ds: Dataset) -> list[Path]:
    if args.target not in ds:
        raise DataError(f"unknown target column {args.target!r}")
    result = compare_predictions(ds, args.target, _config(args), repeats=args.repeats,
                                 train_frac=args.train_frac, seed=args.seed,
                                 paper_mode=args.paper_mode, threads=args.threads)
    written = []
    if args.out:
        write_atomic(args.out, _csv_text(result.header(), result.rows()))
        written.append(Path(args.out))
    print(result.summary())
    if result.failures:
        print(f"failed splits: {result.failures}")
    return written


COMMANDS = {"mi": _cmd_mi, "forest": _cmd_forest, "select": _cmd_select, "compare": _cmd_compare}


def _manifest(args, digest: str) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("manifest", "verbose")}
    return {"tool": "bestpath", "version": __version__, "command": args.command,
            "config": flags, "input_sha256": digest}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be at least 1")
        ds, digest = _load(args)
        written = COMMANDS[args.command](args, ds)
        manifest = Path(args.manifest) if args.manifest else (
            (written[0].parent if written else Path(".")) / "manifest.json")
        write_atomic(manifest, to_json(_manifest(args, digest)))
    except UsageError as exc:
        print(f"bestpath: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"bestpath: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SingularDesignError, SelectionError, ArithmeticError) as exc:
        print(f"bestpath: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
