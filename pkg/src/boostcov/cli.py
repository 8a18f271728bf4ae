"""Command-line entry point: run verification suites and write reports."""

import argparse
import json
import sys
from pathlib import Path

from . import config, io, suites

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def build_parser():
    p = argparse.ArgumentParser(prog="boostcov", description="Run the boosted-covariance verification suites.")
    p.add_argument("--config", metavar="PATH", help="JSON config; keys override the built-in defaults")
    p.add_argument("--suite", metavar="NAME", action="append", choices=config.SUITE_NAMES,
                   help="suite to run (repeatable); default: the config's suite list")
    p.add_argument("--out", metavar="DIR", default="boostcov-out", help="output directory")
    p.add_argument("--seed", metavar="N", type=int, help="override the config seed")
    p.add_argument("--jobs", metavar="N", type=int, default=1, help="worker processes inside a suite")
    p.add_argument("--figures", action="store_true", help="also render PNG figures under DIR/figures")
    p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return p


def _write_dumps(result, out):
    for key, dump in sorted(result.dumps.items()):
        kind, *payload = dump
        if kind == "kernel":
            t, x, vals = payload
            io.write_kernel_csv(out / f"{result.name}_{key}.csv", t, x, vals)
            io.write_kernel_binary(out / f"{result.name}_{key}.bin", t, x, vals)
        elif kind == "spectrum":
            io.write_spectrum_csv(out / f"{result.name}_{key}.csv", payload[0])


def _write_plot_csv(result, out):
    """Plot data as CSV, so figures can be drawn with any tool."""
    for key, data in sorted(result.plots.items()):
        path = out / f"{result.name}_plot_{key}.csv"
        if key == "sup_ratio":
            io.write_table_csv(path, ["dim", "v", "sup_ratio", "sinh_eta"], data)
        elif key == "torus_sweep":
            io.write_table_csv(path, ["length", "max_deviation"], list(zip(*data)))
        elif key == "gram_spectra":
            rows = [(refl, i, j, float(e)) for refl, lists in sorted(data.items())
                    for i, ev in enumerate(lists) for j, e in enumerate(ev)]
            io.write_table_csv(path, ["reflection", "matrix", "index", "eigenvalue"], rows)
        elif key == "spectrum":
            io.write_spectrum_csv(path, data)


def _summary(results):
    rows = [(r.name, c.name, c.anchor, "PASS" if c.passed else "FAIL") for r in results for c in r.checks]
    if not rows:
        return "no suites selected\n"
    widths = [max(len(row[i]) for row in rows) for i in range(3)]
    lines = [f"{a:<{widths[0]}}  {b:<{widths[1]}}  {c:<{widths[2]}}  {d}" for a, b, c, d in rows]
    n_fail = sum(row[3] == "FAIL" for row in rows)
    lines.append(f"{len(rows) - n_fail}/{len(rows)} checks passed")
    return "\n".join(lines) + "\n"


def run(cfg, out, jobs=1, figures=False, stream=None):
    """Run the configured suites; returns (exit status, results)."""
    stream = stream or sys.stdout
    out = Path(out)
    results = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name in cfg["suites"]:
            print(f"running {name} ...", file=stream, flush=True)
            res = suites.SUITES[name](cfg[name], cfg["seed"], jobs)
            results.append(res)
            io.write_json(out / f"{name}.json", {**res.to_dict(), "config": cfg[name], "seed": cfg["seed"]})
            _write_dumps(res, out)
            _write_plot_csv(res, out)
            if figures:
                from . import plotting
                plotting.render(res.plots, out / "figures", name)
        io.write_json(out / "summary.json", {
            "seed": cfg["seed"],
            "suites": [{"suite": r.name, "passed": r.passed, "failures": r.failures} for r in results],
            "checks": [{"suite": r.name, "check": c.name, "anchor": c.anchor, "passed": c.passed}
                       for r in results for c in r.checks],
        })
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO, results
    stream.write(_summary(results))
    failures = [f"{r.name}: {name}" for r in results for name in r.failures]
    if failures:
        print("failing checks:", file=sys.stderr)
        for f in failures:
            print(f"  {f}", file=sys.stderr)
        return EXIT_FAIL, results
    return EXIT_OK, results


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.suite is not None:
        overrides["suites"] = list(dict.fromkeys(args.suite))
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        if args.jobs < 1:
            raise config.ConfigError("--jobs must be at least 1")
        cfg = config.load(args.config, overrides)
    except (config.ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    status, _ = run(cfg, args.out, args.jobs, args.figures)
    return status


if __name__ == "__main__":
    sys.exit(main())
