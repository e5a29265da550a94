#!/usr/bin/env python3
"""Regenerate the golden CSV fixtures by driving the simulator CLI.

The plotting package consumes the simulator exclusively through these CSV
files; this script is the documented recipe that produced them.

Run from the repository root with the `leobh` package installed:
    python plots/golden/regenerate.py
"""

import subprocess
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).parent


def cli(*args: str) -> None:
    cmd = [sys.executable, "-m", "leobh.cli", *args]
    print("+", " ".join(cmd))
    subprocess.run(cmd, check=True)


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        small = Path(tmp) / "small.json"
        table2 = Path(tmp) / "table2.json"
        bh_ckpt = Path(tmp) / "bh.ckpt"
        cli("scenario", "gen", "--preset", "small", "--out", str(small),
            "--set", "bh_period_slots=16")
        cli("scenario", "gen", "--preset", "table2", "--out", str(table2),
            "--set", "bh_period_slots=16")

        # training log (reward/loss curves)
        cli("train", "bh", "--scenario", str(small), "--episodes", "60",
            "--workers", "1", "--actor-lr", "1e-3", "--critic-lr", "3e-3",
            "--seed", "0", "--out", str(bh_ckpt),
            "--log", str(HERE / "train_bh.csv"))

        # 12-satellite eval (per-satellite load / delay bars)
        cli("eval", "--scenario", str(table2), "--policy", "rbh-fp,rbh-dp",
            "--episodes", "2", "--seeds", "0", "--csv",
            str(HERE / "eval_12sat.csv"))

        # alpha trade-off sweep
        cli("sweep", "--scenario", str(small), "--axis", "alpha",
            "--values", "0.0,0.2,0.4,0.6,0.8,1.0", "--policies",
            "rbh-fp,rbh-dp", "--seeds", "0", "--csv",
            str(HERE / "sweep_alpha.csv"))

        # offered-demand sweep (throughput / delay curves)
        cli("sweep", "--scenario", str(small), "--axis", "total_demand",
            "--values", "5e6,15e6,30e6,60e6", "--policies", "rbh-fp,rbh-dp",
            "--seeds", "0", "--csv", str(HERE / "sweep_demand.csv"))
    print("golden CSVs regenerated in", HERE)


if __name__ == "__main__":
    main()
