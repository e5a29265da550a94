#!/usr/bin/env python3
"""Render figures from simulator CSV logs.

Reads only the CSV files the simulator CLI exports; never imports the
simulator itself.  Five figure kinds:

  reward                training log  -> episode reward + loss curves
  tradeoff              sweep CSV     -> load gap & delay fairness vs weight
  load_bars             eval CSV      -> per-satellite mean load, grouped bars
  throughput_vs_demand  sweep CSV     -> throughput vs offered demand
  delay                 sweep CSV     -> delay fairness vs offered demand
                        eval CSV      -> per-satellite mean delay, grouped bars

Usage:
  python plot.py --kind load_bars --csv eval.csv --out fig.png [--force]

Multiple --csv arguments overlay series (labelled by file stem).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PNG_METADATA = {"Software": "leobh-plots"}  # fixed bytes -> reproducible files

TRAIN_COLUMNS = {"episode", "worker", "reward", "loss"}
SWEEP_COLUMNS = {"method", "axis", "value", "throughput_bits", "q_bits", "j_slots"}
EVAL_COLUMNS = {"method", "sat", "load_bits_mean", "delay_slots_mean"}

METHOD_ORDER = ["bhpa-lbdp", "ma3c", "fpa", "dpa", "rbh-dp", "rbh-fp",
                "g", "r", "p", "q"]


class SchemaError(ValueError):
    pass


def read_rows(path: Path, required: set[str]) -> list[dict]:
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = set(reader.fieldnames or [])
        missing = required - header
        if missing:
            raise SchemaError(
                f"{path}: missing columns {sorted(missing)}; found {sorted(header)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def sorted_methods(methods) -> list[str]:
    known = [m for m in METHOD_ORDER if m in methods]
    rest = sorted(m for m in methods if m not in METHOD_ORDER)
    return known + rest


def group_mean(rows, keys, field) -> dict:
    acc: dict = {}
    for r in rows:
        key = tuple(r[k] for k in keys)
        acc.setdefault(key, []).append(float(r[field]))
    return {k: sum(v) / len(v) for k, v in acc.items()}


# ---------------------------------------------------------------- kinds

def plot_reward(paths: list[Path], ax_pair) -> None:
    ax_r, ax_l = ax_pair
    for path in paths:
        rows = read_rows(path, TRAIN_COLUMNS)
        episodes = [int(r["episode"]) for r in rows]
        ax_r.plot(episodes, [float(r["reward"]) for r in rows],
                  label=path.stem, linewidth=1.0)
        ax_l.plot(episodes, [float(r["loss"]) for r in rows],
                  label=path.stem, linewidth=1.0)
    ax_r.set_xlabel("episode")
    ax_r.set_ylabel("episode reward")
    ax_l.set_xlabel("episode")
    ax_l.set_ylabel("episode loss")
    ax_l.set_yscale("log")
    ax_r.legend(fontsize=8)


def plot_tradeoff(paths: list[Path], ax_pair) -> None:
    ax_q, ax_j = ax_pair
    for path in paths:
        rows = read_rows(path, SWEEP_COLUMNS)
        axis = rows[0]["axis"]
        by_method_q = group_mean(rows, ["method", "value"], "q_bits")
        by_method_j = group_mean(rows, ["method", "value"], "j_slots")
        methods = sorted_methods({r["method"] for r in rows})
        for m in methods:
            vals = sorted({float(v) for mm, v in by_method_q if mm == m})
            ax_q.plot(vals, [by_method_q[(m, _fmt(v, by_method_q, m))] for v in vals],
                      marker="o", label=m)
            ax_j.plot(vals, [by_method_j[(m, _fmt(v, by_method_j, m))] for v in vals],
                      marker="s", label=m)
        ax_q.set_xlabel(axis)
        ax_j.set_xlabel(axis)
    ax_q.set_ylabel("traffic load gap (bits)")
    ax_j.set_ylabel("delay fairness (slots)")
    ax_q.legend(fontsize=8)


def _fmt(value: float, table: dict, method: str) -> str:
    # recover the exact CSV string key for a parsed float value
    for m, v in table:
        if m == method and float(v) == value:
            return v
    raise KeyError((method, value))


def _grouped_bars(ax, rows, field, ylabel):
    methods = sorted_methods({r["method"] for r in rows})
    sats = sorted({int(r["sat"]) for r in rows})
    means = group_mean(rows, ["method", "sat"], field)
    width = 0.8 / len(methods)
    for i, m in enumerate(methods):
        xs = [s + (i - (len(methods) - 1) / 2) * width for s in sats]
        ys = [means[(m, str(s))] for s in sats]
        ax.bar(xs, ys, width=width, label=m)
    ax.set_xticks(sats)
    ax.set_xlabel("satellite")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)


def plot_load_bars(paths: list[Path], ax) -> None:
    rows = [r for path in paths for r in read_rows(path, EVAL_COLUMNS)]
    _grouped_bars(ax, rows, "load_bits_mean", "mean traffic load (bits)")


def plot_throughput_vs_demand(paths: list[Path], ax) -> None:
    for path in paths:
        rows = read_rows(path, SWEEP_COLUMNS)
        means = group_mean(rows, ["method", "value"], "throughput_bits")
        for m in sorted_methods({r["method"] for r in rows}):
            vals = sorted({float(v) for mm, v in means if mm == m})
            ax.plot(vals, [means[(m, _fmt(v, means, m))] for v in vals],
                    marker="o", label=m)
    ax.set_xlabel("total traffic demand (bits/slot)")
    ax.set_ylabel("throughput (bits)")
    ax.legend(fontsize=8)


def plot_delay(paths: list[Path], ax) -> None:
    first = read_rows(paths[0], set())
    header = set(first[0])
    if "sat" in header:  # eval CSV: per-satellite delay bars
        rows = [r for path in paths for r in read_rows(path, EVAL_COLUMNS)]
        _grouped_bars(ax, rows, "delay_slots_mean", "mean queueing delay (slots)")
        return
    for path in paths:
        rows = read_rows(path, SWEEP_COLUMNS)
        means = group_mean(rows, ["method", "value"], "j_slots")
        for m in sorted_methods({r["method"] for r in rows}):
            vals = sorted({float(v) for mm, v in means if mm == m})
            ax.plot(vals, [means[(m, _fmt(v, means, m))] for v in vals],
                    marker="o", label=m)
    ax.set_xlabel("total traffic demand (bits/slot)")
    ax.set_ylabel("delay fairness (slots)")
    ax.legend(fontsize=8)


KINDS = {"reward", "tradeoff", "load_bars", "throughput_vs_demand", "delay"}


def render(kind: str, csv_paths: list[str], out: str, force: bool = False) -> None:
    if kind not in KINDS:
        raise SchemaError(f"unknown kind {kind!r}; expected one of {sorted(KINDS)}")
    out_path = Path(out)
    if out_path.exists() and not force:
        raise SchemaError(f"{out}: already exists (use --force to overwrite)")
    paths = [Path(p) for p in csv_paths]

    if kind in ("reward", "tradeoff"):
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
        (plot_reward if kind == "reward" else plot_tradeoff)(paths, axes)
    else:
        fig, ax = plt.subplots(figsize=(6.5, 3.8))
        {"load_bars": plot_load_bars,
         "throughput_vs_demand": plot_throughput_vs_demand,
         "delay": plot_delay}[kind](paths, ax)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120, metadata=PNG_METADATA)
    plt.close(fig)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--kind", required=True, choices=sorted(KINDS))
    p.add_argument("--csv", action="append", required=True,
                   help="input CSV (repeatable)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing output file")
    args = p.parse_args(argv)
    try:
        render(args.kind, args.csv, args.out, force=args.force)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
