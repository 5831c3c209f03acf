"""Command-line entry point: run scenarios, compare series, list presets."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from manetsim.metrics import CATEGORIES, CSV_HEADER
from manetsim.scenario import PRESET_DESCRIPTIONS, PRESETS, ConfigError, load_scenario, run

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3

# friendlier names used in compare verdicts
ALIASES = {
    "app_bits_received": "throughput",
    "data_bits_dropped": "dropped",
    "data_packets_dropped": "dropped packets",
    "routing_bits_sent": "routing sent",
    "routing_bits_received": "routing received",
    "app_bits_sent": "offered",
}


def run_one(source: str, seed: int | None, out_dir: str) -> tuple[str, bool, str, str]:
    """Run a single scenario and write its CSV and summary. Returns (stem, ok, csv, summary_json)."""
    sc = load_scenario(source)
    if seed is not None:
        sc.seed = seed
    res = run(sc, check_dag=True)
    stem = f"{sc.name}_seed{sc.seed}"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = json.dumps(res.summary(), indent=2, sort_keys=True) + "\n"
    (out / f"{stem}.csv").write_text(res.csv, encoding="utf-8")
    (out / f"{stem}.summary.json").write_text(summary, encoding="utf-8")
    return stem, res.ok, res.csv, summary


def _cmd_run(args) -> int:
    # validate everything first so a bad file fails fast with exit 2
    try:
        for src in args.scenario:
            load_scenario(src)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [(s, args.seed, args.out) for s in args.scenario]
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(run_one, *zip(*jobs)))
        else:
            results = [run_one(*j) for j in jobs]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # invariant assertions inside the engine
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    rc = EXIT_OK
    for stem, ok, _, summary in results:
        totals = json.loads(summary)["totals"]
        line = " ".join(f"{k}={v}" for k, v in totals.items())
        print(f"{stem}: {line}")
        if not ok:
            print(f"{stem}: invariant violation (conservation or loop check failed)", file=sys.stderr)
            rc = EXIT_INVARIANT
    return rc


def read_series(path: str | Path) -> tuple[list[str], list[list[int]]]:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    try:
        data = [[int(v) for v in r] for r in body if r]
    except ValueError:
        raise ConfigError(f"{path}: non-integer value in series") from None
    return header, data


def compare_series(path_a: str, path_b: str) -> tuple[str, dict[str, str]]:
    """Side-by-side table plus a per-category verdict naming the larger run."""
    ha, da = read_series(path_a)
    hb, db = read_series(path_b)
    expected = CSV_HEADER.split(",")
    if ha != expected or hb != expected:
        raise ConfigError("column schema mismatch")
    if [r[0] for r in da] != [r[0] for r in db]:
        raise ConfigError("bucket schema mismatch (different time columns)")
    name_a, name_b = Path(path_a).stem, Path(path_b).stem
    lines = []
    head = ["time_s"] + [f"{c}[{tag}]" for c in CATEGORIES for tag in ("A", "B")]
    lines.append(",".join(head))
    for ra, rb in zip(da, db):
        cells = [str(ra[0])]
        for i in range(1, len(expected)):
            cells += [str(ra[i]), str(rb[i])]
        lines.append(",".join(cells))
    verdicts = {}
    lines.append("")
    lines.append(f"A = {name_a}, B = {name_b}")
    for i, cat in enumerate(CATEGORIES, 1):
        ta, tb = sum(r[i] for r in da), sum(r[i] for r in db)
        winner = "equal" if ta == tb else (f"{name_a} greater" if ta > tb else f"{name_b} greater")
        verdicts[cat] = winner
        lines.append(f"{ALIASES[cat]} ({cat}) verdict: {winner}  [{ta} vs {tb}]")
    return "\n".join(lines) + "\n", verdicts


def _cmd_compare(args) -> int:
    try:
        text, _ = compare_series(args.a, args.b)
    except (ConfigError, OSError) as exc:
        print(f"compare error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_presets(args) -> int:
    width = max(map(len, PRESETS))
    for name in PRESETS:
        print(f"{name:<{width}}  {PRESET_DESCRIPTIONS[name]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="manetsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run scenario files or presets")
    r.add_argument("scenario", nargs="+", help="scenario file path or preset name")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    r.set_defaults(func=_cmd_run)
    c = sub.add_parser("compare", help="compare two series CSV files")
    c.add_argument("a")
    c.add_argument("b")
    c.set_defaults(func=_cmd_compare)
    ps = sub.add_parser("presets", help="list shipped presets")
    ps.set_defaults(func=_cmd_presets)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
