"""Command-line interface: tune, fit, predict, bench and report.

Datasets are CSV files with a mandatory header; columns whose names start
with "x" are predictors, columns starting with "y" are responses.  Exit
codes: 0 success, 2 input error, 3 numerical failure, 4 invalid benchmark
cell.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from .estimators import FITTERS, Hyper, load_model, predict, save_model
from .simbench import (
    MEAN_MODELS,
    MODELS,
    SCENARIOS,
    VARIANCE_MODELS,
    SimConfig,
    results_to_csv,
    results_to_table,
    run_cell,
)
from .tuning import select_x_params, select_y_params

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_INVALID_CELL = 4


class InputError(Exception):
    pass


def read_dataset(path) -> tuple[np.ndarray, np.ndarray, list[str], list[str]]:
    """Read a dataset CSV; returns (x, y, x_names, y_names)."""
    try:
        f = open(path, newline="")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    with f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: no data rows") from None
        x_cols = [i for i, name in enumerate(header) if name.strip().lower().startswith("x")]
        y_cols = [i for i, name in enumerate(header) if name.strip().lower().startswith("y")]
        if not x_cols or not y_cols:
            raise InputError(
                f"{path}: header must contain at least one x-prefixed and one y-prefixed column"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as e:
                raise InputError(f"{path}:{lineno}: {e}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    x = data[:, x_cols]
    y = data[:, y_cols]
    for cols, block in (("x", x), ("y", y)):
        if block.shape[0] >= 2 and np.any(np.ptp(block, axis=0) == 0.0):
            raise InputError(f"{path}: constant {cols}-column")
    return x, y, [header[i] for i in x_cols], [header[i] for i in y_cols]


def _read_x_only(path, p_expected: int) -> np.ndarray:
    """Read the x-columns of a CSV for prediction; p must match the model."""
    try:
        f = open(path, newline="")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    with f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: no data rows") from None
        x_cols = [i for i, name in enumerate(header) if name.strip().lower().startswith("x")]
        if not x_cols:
            raise InputError(f"{path}: no x-prefixed columns")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(row[i]) for i in x_cols])
            except ValueError as e:
                raise InputError(f"{path}:{lineno}: {e}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    x = np.array(rows, dtype=float)
    if x.shape[1] != p_expected:
        raise InputError(
            f"{path}: model expects {p_expected} predictor columns, file has {x.shape[1]}"
        )
    return x


def write_config(path, gamma_x, eps_x, gamma_y, eps_y) -> None:
    with open(path, "w") as f:
        f.write(f"gamma_x={gamma_x!r}\n")
        f.write(f"eps_x={eps_x!r}\n")
        f.write(f"gamma_y={gamma_y!r}\n")
        f.write(f"eps_y={eps_y!r}\n")


def read_config(path) -> dict[str, float]:
    values = {}
    try:
        with open(path) as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InputError(f"{path}:{lineno}: expected key=value")
                key, val = line.split("=", 1)
                values[key.strip()] = float(val)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    missing = {"gamma_x", "eps_x", "gamma_y", "eps_y"} - values.keys()
    if missing:
        raise InputError(f"{path}: missing keys: {', '.join(sorted(missing))}")
    return values


def cmd_tune(args) -> int:
    x, y, _, _ = read_dataset(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gamma_x, eps_x, trace_x = select_x_params(x, y)
    gamma_y, eps_y, trace_y = select_y_params(x, y)
    write_config(out / "params.cfg", gamma_x, eps_x, gamma_y, eps_y)
    trace_x.write_csv(out / "cv_x.csv")
    trace_y.write_csv(out / "cv_y.csv")
    print(f"gamma_x={gamma_x:.6g} eps_x={eps_x:.6g} gamma_y={gamma_y:.6g} eps_y={eps_y:.6g}")
    return EXIT_OK


def _hyper_from_args(args) -> Hyper:
    if args.config:
        cfg = read_config(args.config)
        return Hyper(
            gamma_x=cfg["gamma_x"],
            gamma_y=cfg["gamma_y"],
            eps_x=cfg["eps_x"],
            eps_y=cfg["eps_y"],
            d=args.d,
            slices=args.slices,
            gsave_exponent=args.gsave_exponent,
        )
    if args.gamma_x is None or args.gamma_y is None:
        raise InputError("provide --config or both --gamma-x and --gamma-y")
    return Hyper(
        gamma_x=args.gamma_x,
        gamma_y=args.gamma_y,
        eps_x=args.eps_x,
        eps_y=args.eps_y,
        d=args.d,
        slices=args.slices,
        gsave_exponent=args.gsave_exponent,
    )


def cmd_fit(args) -> int:
    x, y, _, _ = read_dataset(args.data)
    hyper = _hyper_from_args(args)
    model = FITTERS[args.method](x, y, hyper)
    save_model(model, args.out)
    print("eigenvalues: " + " ".join(f"{v:.6g}" for v in model.eigvals))
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    x = _read_x_only(args.data, model.p)
    preds = predict(model, x)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"pred_{i + 1}" for i in range(preds.shape[1])])
        for row in preds:
            w.writerow([repr(float(v)) for v in row])
    return EXIT_OK


TABLE1_CELLS = [(m, s) for s in SCENARIOS for m in MEAN_MODELS]
TABLE2_CELLS = [(m, s) for s in SCENARIOS for m in VARIANCE_MODELS]
TABLE1_METHODS = ("ksir", "kcca", "gsir")
TABLE2_METHODS = ("gsave", "ksir", "kcca", "gsir")


def _parse_cells(specs) -> list[tuple[str, str, tuple[str, ...]]]:
    """Cell specs: 'table1', 'table2', or 'MODEL/SCENARIO/method'."""
    cells = []
    for spec in specs:
        if spec == "table1":
            cells.extend((m, s, TABLE1_METHODS) for m, s in TABLE1_CELLS)
        elif spec == "table2":
            cells.extend((m, s, TABLE2_METHODS) for m, s in TABLE2_CELLS)
        else:
            parts = spec.split("/")
            if len(parts) != 3:
                raise InputError(f"bad cell spec {spec!r}: expected MODEL/SCENARIO/method")
            model, scenario, method = parts
            if model not in MODELS:
                raise InputError(f"bad cell spec {spec!r}: unknown model {model!r}")
            if scenario not in SCENARIOS:
                raise InputError(f"bad cell spec {spec!r}: unknown scenario {scenario!r}")
            if method not in FITTERS:
                raise InputError(f"bad cell spec {spec!r}: unknown method {method!r}")
            cells.append((model, scenario, (method,)))
    return cells


def cmd_bench(args) -> int:
    cells = _parse_cells(args.cells)
    threads = args.threads or int(os.environ.get("NLSDR_THREADS", "1"))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for model, scenario, methods in cells:
        cfg = SimConfig(
            model=model,
            scenario=scenario,
            methods=methods,
            reps=args.reps,
            seed=args.seed,
            n_train=args.n_train,
            n_test=args.n_test,
            gsave_exponent=args.gsave_exponent,
            tune_once=args.tune_once,
        )
        results.append(run_cell(cfg, threads=threads))
    (out_dir / "cells.csv").write_text(results_to_csv(results))
    (out_dir / "table.txt").write_text(results_to_table(results))
    print(results_to_table(results), end="")
    if any(not r.valid for r in results):
        return EXIT_INVALID_CELL
    return EXIT_OK


def cmd_report(args) -> int:
    """Re-render the aligned text table from a bench CSV."""
    try:
        with open(args.csv, newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise InputError(f"cannot read {args.csv}: {e}") from e
    if not rows:
        raise InputError(f"{args.csv}: no data rows")
    # group rows by cell in file order
    cells: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        cells.setdefault((row["model"], row["scenario"]), []).append(row)
    methods: list[str] = []
    for group in cells.values():
        for row in group:
            if row["method"] not in methods:
                methods.append(row["method"])
    lines = [["X", "Y|X"] + [m.upper() for m in methods]]
    for (model, scenario), group in cells.items():
        by = {row["method"]: row for row in group}
        line = [scenario, model]
        for m in methods:
            row = by.get(m)
            line.append(
                f"{float(row['mean_truth']):.2f} ({float(row['sd_truth']):.2f})" if row else "-"
            )
        lines.append(line)
    widths = [max(len(l[i]) for l in lines) for i in range(len(lines[0]))]
    out = "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip() for line in lines
    )
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlsdr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_tune = sub.add_parser("tune", help="cross-validate kernel bandwidths")
    p_tune.add_argument("data", help="dataset CSV (x*/y* columns)")
    p_tune.add_argument("--out", required=True, help="output directory")
    p_tune.set_defaults(func=cmd_tune)

    p_fit = sub.add_parser("fit", help="fit one estimator and persist the model")
    p_fit.add_argument("data")
    p_fit.add_argument("--method", required=True, choices=sorted(FITTERS))
    p_fit.add_argument("--config", help="params.cfg from 'tune'")
    p_fit.add_argument("--gamma-x", type=float)
    p_fit.add_argument("--gamma-y", type=float)
    p_fit.add_argument("--eps-x", type=float, default=0.01)
    p_fit.add_argument("--eps-y", type=float, default=0.001)
    p_fit.add_argument("--d", type=int, default=1)
    p_fit.add_argument("--slices", type=int, default=10)
    p_fit.add_argument("--gsave-exponent", choices=("derivation", "printed"), default="derivation")
    p_fit.add_argument("--out", required=True, help="model file")
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="evaluate a fitted model on new data")
    p_pred.add_argument("model")
    p_pred.add_argument("data")
    p_pred.add_argument("--out", required=True, help="prediction CSV")
    p_pred.set_defaults(func=cmd_predict)

    p_bench = sub.add_parser("bench", help="Monte Carlo benchmark cells")
    p_bench.add_argument("cells", nargs="+", help="'table1', 'table2' or MODEL/SCENARIO/method")
    p_bench.add_argument("--reps", type=int, default=200)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--n-train", type=int, default=200)
    p_bench.add_argument("--n-test", type=int, default=200)
    p_bench.add_argument("--threads", type=int, default=0, help="0 = NLSDR_THREADS or 1")
    p_bench.add_argument("--gsave-exponent", choices=("derivation", "printed"), default="derivation")
    p_bench.add_argument("--tune-once", action="store_true", help="tune once per cell, reuse")
    p_bench.add_argument("--out-dir", required=True)
    p_bench.set_defaults(func=cmd_bench)

    p_rep = sub.add_parser("report", help="render the text table from a bench CSV")
    p_rep.add_argument("csv")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except np.linalg.LinAlgError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
