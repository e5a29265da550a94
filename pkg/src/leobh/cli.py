"""Command-line interface.

Subcommands: scenario gen, train {predictor,bh,pa,dpa}, eval, sweep,
compare-bh.  Failures exit nonzero after printing one machine-readable
JSON line ({"error": ...}) to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .baselines import (DemandPower, DpaTrainer, FixedPower, GreedyBh,
                        PeriodicBh, QueueBh, RandomBh)
from .bh_ma3c import Ma3cBhTrainer
from .harness import (evaluate, scaled_demand_scenario, sweep,
                      write_training_csv)
from .pa_maddpg import MapaTrainer
from .predictor import PredictorBank
from .scenario import Scenario, small_scenario, table2_scenario
from .traffic import generate_trace


def _parse_seeds(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s]


def _parse_values(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def cmd_scenario_gen(args) -> int:
    preset = table2_scenario if args.preset == "table2" else small_scenario
    overrides = {}
    for item in args.set or []:
        key, _, value = item.partition("=")
        if not value:
            raise ValueError(f"--set expects key=value, got {item!r}")
        overrides[key] = json.loads(value)
    sc = preset(**overrides)
    sc.to_json(args.out)
    print(f"wrote scenario to {args.out}")
    return 0


def _load_scenario(args) -> Scenario:
    return Scenario.from_json(args.scenario)


def _estimator(args, scenario):
    ckpt = getattr(args, "predictor_ckpt", None)
    return PredictorBank.load(ckpt) if ckpt else None


def cmd_train_predictor(args) -> int:
    sc = _load_scenario(args)
    from .geometry import build_constellation_cached
    _, coverage = build_constellation_cached(sc)
    trace = generate_trace(sc, n_slots=args.slots, seed=args.seed)
    bank = PredictorBank.fit_from_trace(
        trace.arrivals, coverage, window=args.window, hidden=args.hidden,
        epochs=args.epochs, lr=args.lr, seed=args.seed)
    bank.save(args.out)
    losses = [m.loss_curve_[-1] for m in bank.models]
    print(f"trained {len(bank.models)} predictors; "
          f"final scaled MSE mean={np.mean(losses):.6f}; saved to {args.out}")
    return 0


def cmd_train_bh(args) -> int:
    sc = _load_scenario(args)
    trainer = Ma3cBhTrainer(episodes=args.episodes, workers=args.workers,
                            actor_lr=args.actor_lr, critic_lr=args.critic_lr,
                            seed=args.seed)
    trainer.fit(sc, estimator=_estimator(args, sc))
    trainer.save(args.out)
    if args.log:
        write_training_csv(args.log, trainer.history_)
    rewards = [h["reward"] for h in trainer.history_]
    print(f"trained MA3C-BH for {len(rewards)} episodes; "
          f"last-10 mean reward={np.mean(rewards[-10:]):.4f}; saved to {args.out}")
    return 0


def cmd_train_pa(args) -> int:
    sc = _load_scenario(args)
    bh_policy = (Ma3cBhTrainer.load_policy(args.bh_ckpt) if args.bh_ckpt
                 else QueueBh())
    trainer = MapaTrainer(episodes=args.episodes, actor_lr=args.actor_lr,
                          critic_lr=args.critic_lr, noise=args.noise,
                          batch_size=args.batch_size, seed=args.seed)
    trainer.fit(sc, bh_policy=bh_policy, estimator=_estimator(args, sc))
    trainer.save(args.out)
    if args.log:
        write_training_csv(args.log, trainer.history_)
    rewards = [h["reward"] for h in trainer.history_]
    print(f"trained MAPA for {len(rewards)} episodes; "
          f"last-10 mean reward={np.mean(rewards[-10:]):.4f}; saved to {args.out}")
    return 0


def cmd_train_dpa(args) -> int:
    sc = _load_scenario(args)
    trainer = DpaTrainer(episodes=args.episodes, actor_lr=args.actor_lr,
                         critic_lr=args.critic_lr, seed=args.seed)
    trainer.fit(sc, estimator=_estimator(args, sc))
    trainer.save(args.out)
    if args.log:
        write_training_csv(args.log, trainer.history_)
    print(f"trained DPA for {args.episodes} episodes; saved to {args.out}")
    return 0


def _policy_pair(name: str, args):
    if name == "rbh-fp":
        return RandomBh(), FixedPower()
    if name == "rbh-dp":
        return RandomBh(), DemandPower()
    if name == "fpa":
        if not args.bh_ckpt:
            raise ValueError("policy 'fpa' needs --bh-ckpt")
        return Ma3cBhTrainer.load_policy(args.bh_ckpt), FixedPower()
    if name == "bhpa-lbdp":
        if not args.bh_ckpt or not args.pa_ckpt:
            raise ValueError("policy 'bhpa-lbdp' needs --bh-ckpt and --pa-ckpt")
        return (Ma3cBhTrainer.load_policy(args.bh_ckpt),
                MapaTrainer.load_policy(args.pa_ckpt))
    if name == "dpa":
        if not args.dpa_ckpt:
            raise ValueError("policy 'dpa' needs --dpa-ckpt")
        policy = DpaTrainer.load_policy(args.dpa_ckpt)
        return policy, policy
    raise ValueError(f"unknown policy {name!r}")


def cmd_eval(args) -> int:
    sc = _load_scenario(args)
    policies = {name: _policy_pair(name, args)
                for name in args.policy.split(",") if name}
    summary = evaluate(sc, policies, seeds=_parse_seeds(args.seeds),
                       episodes_per_seed=args.episodes,
                       estimator=_estimator(args, sc), csv_path=args.csv)
    for method, stats in summary.items():
        th = stats["throughput_bits"]
        print(f"{method}: throughput={th['mean']:.3e}±{th['std']:.2e} bits, "
              f"q={stats['q_bits']['mean']:.3e} bits, "
              f"j={stats['j_slots']['mean']:.3f} slots, "
              f"delay={stats['delay_slots_mean']['mean']:.3f} slots")
    if args.csv:
        print(f"wrote per-episode CSV to {args.csv}")
    return 0


def cmd_compare_bh(args) -> int:
    sc = _load_scenario(args)
    available = {"r": RandomBh, "g": GreedyBh, "p": PeriodicBh, "q": QueueBh}
    policies = {}
    for name in args.methods.split(","):
        name = name.strip()
        if name == "ma3c":
            if not args.bh_ckpt:
                raise ValueError("method 'ma3c' needs --bh-ckpt")
            policies["ma3c"] = (Ma3cBhTrainer.load_policy(args.bh_ckpt),
                                FixedPower())
        elif name in available:
            policies[name] = (available[name](), FixedPower())
        else:
            raise ValueError(f"unknown BH method {name!r}")
    summary = evaluate(sc, policies, seeds=_parse_seeds(args.seeds),
                       episodes_per_seed=args.episodes,
                       estimator=_estimator(args, sc), csv_path=args.csv)
    for method, stats in summary.items():
        print(f"{method}: load gap={stats['q_bits']['mean']:.3e} bits, "
              f"fairness={stats['j_slots']['mean']:.3f} slots")
    return 0


def cmd_sweep(args) -> int:
    base = _load_scenario(args)

    def factory(axis, value):
        doc = base.to_dict()
        if axis in ("alpha", "beta"):
            doc[axis] = value
            return Scenario.from_dict(doc)
        if axis == "total_demand":
            return scaled_demand_scenario(base, value)
        raise ValueError(f"unknown sweep axis {axis!r}")

    def policies_factory(sc):
        return {name: _policy_pair(name, args)
                for name in args.policies.split(",") if name}

    rows = sweep(factory, args.axis, _parse_values(args.values),
                 policies_factory, seeds=_parse_seeds(args.seeds),
                 csv_path=args.csv)
    print(f"swept {args.axis} over {len(_parse_values(args.values))} values; "
          f"{len(rows)} rows -> {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leobh",
                                description="LEO beam-hopping/power simulator")
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", help="scenario file tools")
    sc_sub = sc.add_subparsers(dest="scenario_cmd", required=True)
    gen = sc_sub.add_parser("gen", help="write a scenario JSON")
    gen.add_argument("--preset", choices=["table2", "small"], default="table2")
    gen.add_argument("--set", action="append", metavar="KEY=JSON",
                     help="override a scenario field (repeatable)")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_scenario_gen)

    tr = sub.add_parser("train", help="train a component")
    tr_sub = tr.add_subparsers(dest="train_cmd", required=True)

    tp = tr_sub.add_parser("predictor")
    tp.add_argument("--scenario", required=True)
    tp.add_argument("--slots", type=int, default=1024)
    tp.add_argument("--window", type=int, default=32)
    tp.add_argument("--hidden", type=int, default=64)
    tp.add_argument("--epochs", type=int, default=40)
    tp.add_argument("--lr", type=float, default=1e-2)
    tp.add_argument("--seed", type=int, default=0)
    tp.add_argument("--out", required=True)
    tp.set_defaults(func=cmd_train_predictor)

    tb = tr_sub.add_parser("bh")
    tb.add_argument("--scenario", required=True)
    tb.add_argument("--episodes", type=int, default=6000)
    tb.add_argument("--workers", type=int, default=16)
    tb.add_argument("--actor-lr", type=float, default=1e-5)
    tb.add_argument("--critic-lr", type=float, default=1e-4)
    tb.add_argument("--seed", type=int, default=0)
    tb.add_argument("--predictor-ckpt")
    tb.add_argument("--log", help="per-episode training CSV")
    tb.add_argument("--out", required=True)
    tb.set_defaults(func=cmd_train_bh)

    ta = tr_sub.add_parser("pa")
    ta.add_argument("--scenario", required=True)
    ta.add_argument("--episodes", type=int, default=6000)
    ta.add_argument("--actor-lr", type=float, default=1e-5)
    ta.add_argument("--critic-lr", type=float, default=1e-4)
    ta.add_argument("--noise", type=float, default=0.2)
    ta.add_argument("--batch-size", type=int, default=64)
    ta.add_argument("--bh-ckpt", help="beam-hopping checkpoint (default Q-BH)")
    ta.add_argument("--predictor-ckpt")
    ta.add_argument("--seed", type=int, default=0)
    ta.add_argument("--log")
    ta.add_argument("--out", required=True)
    ta.set_defaults(func=cmd_train_pa)

    td = tr_sub.add_parser("dpa")
    td.add_argument("--scenario", required=True)
    td.add_argument("--episodes", type=int, default=6000)
    td.add_argument("--actor-lr", type=float, default=1e-5)
    td.add_argument("--critic-lr", type=float, default=1e-4)
    td.add_argument("--seed", type=int, default=0)
    td.add_argument("--predictor-ckpt")
    td.add_argument("--log")
    td.add_argument("--out", required=True)
    td.set_defaults(func=cmd_train_dpa)

    ev = sub.add_parser("eval", help="evaluate policies")
    ev.add_argument("--scenario", required=True)
    ev.add_argument("--policy", required=True,
                    help="comma list of bhpa-lbdp,rbh-fp,rbh-dp,fpa,dpa")
    ev.add_argument("--episodes", type=int, default=20)
    ev.add_argument("--seeds", "--seed", default="0",
                    help="comma list of evaluation seeds")
    ev.add_argument("--bh-ckpt")
    ev.add_argument("--pa-ckpt")
    ev.add_argument("--dpa-ckpt")
    ev.add_argument("--predictor-ckpt")
    ev.add_argument("--csv")
    ev.set_defaults(func=cmd_eval)

    cb = sub.add_parser("compare-bh", help="compare BH-only methods")
    cb.add_argument("--scenario", required=True)
    cb.add_argument("--methods", default="ma3c,g,r,p,q")
    cb.add_argument("--episodes", type=int, default=20)
    cb.add_argument("--seeds", "--seed", default="0",
                    help="comma list of evaluation seeds")
    cb.add_argument("--bh-ckpt")
    cb.add_argument("--predictor-ckpt")
    cb.add_argument("--csv")
    cb.set_defaults(func=cmd_compare_bh)

    sw = sub.add_parser("sweep", help="sweep a scenario axis")
    sw.add_argument("--scenario", required=True)
    sw.add_argument("--axis", required=True,
                    choices=["alpha", "beta", "total_demand"])
    sw.add_argument("--values", required=True, help="comma list of values")
    sw.add_argument("--policies", default="rbh-fp,rbh-dp")
    sw.add_argument("--seeds", "--seed", default="0",
                    help="comma list of seeds")
    sw.add_argument("--bh-ckpt")
    sw.add_argument("--pa-ckpt")
    sw.add_argument("--dpa-ckpt")
    sw.add_argument("--csv", required=True)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # single machine-readable error line
        print(json.dumps({"error": f"{type(exc).__name__}: {exc}"}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
