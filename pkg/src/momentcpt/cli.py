"""Command line interface.

Subcommands: ``test`` (decision + location), ``detect`` (location only),
``critval`` (simulate critical values), ``simulate`` (experiment harness).
Exit status: 0 = ran, no rejection; 2 = ran, change detected; 1 = any error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import limits, montecarlo, zprocess
from .errors import EstimationError
from .models import get_model, model_names


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for
    # "change detected" here, so usage errors exit 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_data(path) -> np.ndarray:
    values: list[float] = []
    maybe_header = True
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                if maybe_header:
                    maybe_header = False
                    continue
                raise ValueError(
                    f"{path}: line {lineno}: cannot parse {text!r}"
                ) from None
            if not math.isfinite(value):
                raise ValueError(
                    f"{path}: line {lineno}: non-finite value {text!r}"
                )
            maybe_header = False
            values.append(value)
    if not values:
        raise ValueError(f"{path}: no observations found")
    return np.asarray(values, dtype=float)


def _write_path_dump(path, report) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["k", "u", "t"])
        for k, t in enumerate(report.t_path):
            writer.writerow([k, repr(k / report.n), repr(float(t))])


def _fmt_vec(vec) -> str:
    return " ".join(f"{v:.6g}" for v in vec)


def _resolve_critical_value(args, dim: int) -> float:
    if args.table is not None:
        return limits.lookup_critical_value(dim, args.level, args.table)
    if args.simulate_critval:
        table = limits.critical_value(
            dim,
            args.level,
            replications=args.critval_replications,
            seed=args.seed,
            jobs=args.jobs,
        )
        return table.quantiles[float(args.level)]
    return limits.lookup_critical_value(dim, args.level, None)


def cmd_test(args) -> int:
    data = _read_data(args.data)
    model = get_model(args.model)
    crit = _resolve_critical_value(args, model.dim)
    report = zprocess.run_test(
        data, model, level=args.level, critical_value=crit, ridge=args.ridge
    )
    if args.dump_path:
        _write_path_dump(args.dump_path, report)
    if args.json:
        print(
            json.dumps(
                {
                    "command": "test",
                    "model": model.name,
                    "n": report.n,
                    "level": report.level,
                    "theta_hat": [float(t) for t in report.theta_hat],
                    "t_stat": report.t_stat,
                    "critical_value": report.critical_value,
                    "reject": report.reject,
                    "u_hat": report.u_hat,
                    "k_hat": report.k_hat,
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(f"model: {model.name} (dim {model.dim})")
        print(f"n: {report.n}")
        print(f"theta_hat: {_fmt_vec(report.theta_hat)}")
        print(f"statistic: {report.t_stat:.6g}")
        print(
            f"critical value: {report.critical_value:.6g} "
            f"(level {report.level:g})"
        )
        print(
            "decision: change detected"
            if report.reject
            else "decision: no change detected"
        )
        note = "" if report.reject else ", not significant"
        print(f"u_hat: {report.u_hat:.6g} (k = {report.k_hat}{note})")
    return 2 if report.reject else 0


def cmd_detect(args) -> int:
    data = _read_data(args.data)
    model = get_model(args.model)
    report = zprocess.detect(data, model, ridge=args.ridge)
    if args.dump_path:
        _write_path_dump(args.dump_path, report)
    if args.json:
        print(
            json.dumps(
                {
                    "command": "detect",
                    "model": model.name,
                    "n": report.n,
                    "theta_hat": [float(t) for t in report.theta_hat],
                    "t_stat": report.t_stat,
                    "u_hat": report.u_hat,
                    "k_hat": report.k_hat,
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(f"model: {model.name} (dim {model.dim})")
        print(f"n: {report.n}")
        print(f"theta_hat: {_fmt_vec(report.theta_hat)}")
        print(f"statistic: {report.t_stat:.6g}")
        print(f"u_hat: {report.u_hat:.6g} (k = {report.k_hat})")
    return 0


def cmd_critval(args) -> int:
    rows: dict = {}
    tables = []
    for dim in args.dim:
        table = limits.critical_value(
            dim,
            args.level,
            replications=args.replications,
            grid=args.grid,
            seed=args.seed,
            jobs=args.jobs,
        )
        tables.append(table)
        rows.update(limits.rows_from_table(table))
    if args.out:
        merged: dict = {}
        try:
            merged.update(limits.read_table_file(args.out))
        except FileNotFoundError:
            pass
        merged.update(rows)
        limits.write_table_file(args.out, merged)
    if args.json:
        print(
            json.dumps(
                {
                    "command": "critval",
                    "rows": [
                        {
                            "dim": dim,
                            "level": level,
                            "value": row.value,
                            "stderr": row.stderr,
                            "replications": row.replications,
                            "grid": row.grid_points,
                            "seed": row.seed,
                        }
                        for (dim, level), row in sorted(rows.items())
                    ],
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        for (dim, level), row in sorted(rows.items()):
            print(
                f"dim {dim} level {level:g}: {row.value:.6f} "
                f"(se {row.stderr:.2g}, replications {row.replications}, "
                f"grid {row.grid_points}, seed {row.seed})"
            )
    return 0


def _result_row(result) -> dict:
    config = result.config
    return {
        "model": config.model,
        "theta0": ";".join(repr(t) for t in config.theta0),
        "theta1": ";".join(repr(t) for t in config.theta1)
        if config.theta1 is not None
        else "",
        "ustar": repr(config.ustar) if config.ustar is not None else "",
        "n": config.n,
        "m": config.m,
        "level": repr(config.level),
        "seed": config.seed,
        "rejection_rate": repr(result.rejection_rate),
        "n_failed": result.n_failed,
        "u_hat_mean": repr(result.u_hat_mean) if result.u_hat_mean is not None else "",
        "u_hat_sd": repr(result.u_hat_sd) if result.u_hat_sd is not None else "",
        "u_hat_rmse": repr(result.u_hat_rmse) if result.u_hat_rmse is not None else "",
    }


def _write_simulate_csv(out_prefix: str, results) -> None:
    fields = [
        "model",
        "theta0",
        "theta1",
        "ustar",
        "n",
        "m",
        "level",
        "seed",
        "rejection_rate",
        "n_failed",
        "u_hat_mean",
        "u_hat_sd",
        "u_hat_rmse",
    ]
    with open(f"{out_prefix}.csv", "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for result in results:
            writer.writerow(_result_row(result))
    with open(f"{out_prefix}_hist.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["ustar", "n", "bin_left", "bin_right", "count"])
        for result in results:
            if result.histogram_counts is None:
                continue
            config = result.config
            ustar = repr(config.ustar) if config.ustar is not None else ""
            edges = result.histogram_edges
            for i, count in enumerate(result.histogram_counts):
                writer.writerow(
                    [
                        ustar,
                        config.n,
                        repr(float(edges[i])),
                        repr(float(edges[i + 1])),
                        int(count),
                    ]
                )


def _summary_line(result) -> str:
    config = result.config
    head = f"{config.model} n={config.n} m={config.m}"
    if config.has_change:
        head += f" ustar={config.ustar:g}"
        tail = (
            f" u_hat mean {result.u_hat_mean:.4f} sd {result.u_hat_sd:.4f} "
            f"rmse {result.u_hat_rmse:.4f}"
        )
    else:
        head += " (no change)"
        tail = ""
    return (
        f"{head}: reject rate {result.rejection_rate:.4f} "
        f"(failed {result.n_failed}){tail}"
    )


def cmd_simulate(args) -> int:
    configs = montecarlo.load_config(args.config)
    if args.seed is not None:
        configs = [replace(c, seed=args.seed) for c in configs]
    results = [
        montecarlo.run_experiment(c, jobs=args.jobs, table=args.table)
        for c in configs
    ]
    if args.out:
        _write_simulate_csv(args.out, results)
    if args.json:
        print(
            json.dumps(
                {
                    "command": "simulate",
                    "results": [
                        {
                            **_result_row(r),
                            "n_completed": r.n_completed,
                            "critical_value": r.critical_value,
                            "failure_counts": r.failure_counts,
                        }
                        for r in results
                    ],
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        for result in results:
            print(_summary_line(result))
    return 0


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part]


def _build_parser() -> _Parser:
    parser = _Parser(prog="momentcpt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="run the change point test on a data file")
    test.add_argument("data", help="text file, one observation per line")
    test.add_argument(
        "--model", required=True, choices=model_names(), help="model family"
    )
    test.add_argument("--level", type=float, default=0.05)
    test.add_argument("--table", default=None, help="critical value table file")
    test.add_argument(
        "--simulate-critval",
        action="store_true",
        help="simulate the critical value instead of using a table",
    )
    test.add_argument(
        "--critval-replications",
        type=int,
        default=limits.DEFAULT_REPLICATIONS,
        help="replications for --simulate-critval",
    )
    test.add_argument("--seed", type=int, default=limits.DEFAULT_SEED)
    test.add_argument("--jobs", type=int, default=1)
    test.add_argument("--ridge", type=float, default=0.0)
    test.add_argument("--dump-path", default=None, help="write the statistic path as CSV")
    test.add_argument("--json", action="store_true")
    test.set_defaults(func=cmd_test)

    detect = sub.add_parser("detect", help="locate the best change candidate")
    detect.add_argument("data")
    detect.add_argument("--model", required=True, choices=model_names())
    detect.add_argument("--ridge", type=float, default=0.0)
    detect.add_argument("--dump-path", default=None)
    detect.add_argument("--json", action="store_true")
    detect.set_defaults(func=cmd_detect)

    critval = sub.add_parser("critval", help="simulate critical values")
    critval.add_argument(
        "--dim", type=_int_list, required=True, help="dimension(s), e.g. 2 or 1,2,3"
    )
    critval.add_argument(
        "--level", type=_float_list, default=[0.05], help="level(s), e.g. 0.05 or 0.1,0.05,0.01"
    )
    critval.add_argument(
        "--replications", type=int, default=limits.DEFAULT_REPLICATIONS
    )
    critval.add_argument("--grid", type=int, default=limits.DEFAULT_GRID)
    critval.add_argument("--seed", type=int, default=limits.DEFAULT_SEED)
    critval.add_argument("--jobs", type=int, default=1)
    critval.add_argument("--out", default=None, help="table file to create or update")
    critval.add_argument("--json", action="store_true")
    critval.set_defaults(func=cmd_critval)

    simulate = sub.add_parser("simulate", help="run experiments from a config file")
    simulate.add_argument("config", help="JSON experiment config")
    simulate.add_argument("--seed", type=int, default=None, help="override the config seed")
    simulate.add_argument("--jobs", type=int, default=1)
    simulate.add_argument("--table", default=None, help="critical value table file")
    simulate.add_argument("--out", default=None, help="prefix for CSV outputs")
    simulate.add_argument("--json", action="store_true")
    simulate.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EstimationError, ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
