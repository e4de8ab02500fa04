"""Command line interface: simulate, sweep, validate."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (ScenarioConfig, load_config, run_campaign, save_config,
                      write_aggregate_csv, write_events_csv, write_trial_csv,
                      emit_plots)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("RETRACK_OUT") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> ScenarioConfig:
    if args.config:
        return load_config(args.config)
    return ScenarioConfig()


def cmd_simulate(args) -> int:
    config = _load(args)
    if args.strategy:
        config.strategy = args.strategy
    config.validate()
    out = _out_dir(args)
    result = run_campaign(config, n_trials=args.trials, base_seed=args.seed)
    for trace in result.traces:
        stem = f"trial_{config.strategy}_n{config.n}_seed{trace.seed}"
        write_trial_csv(trace, out / f"{stem}.csv")
        write_events_csv(trace, out / f"{stem}_events.csv")
    write_aggregate_csv([result], out / f"aggregate_{config.strategy}_n{config.n}.csv")
    if args.plots:
        emit_plots([result], out)
    final_median = result.trp_quartiles[1, -1] if result.epochs.size else float("nan")
    print(f"{config.strategy} n={config.n}: {len(result.traces)}/{args.trials} trials ok, "
          f"median final max-trace {final_median:.6g}")
    for seed, msg in result.failures:
        print(f"  seed {seed} failed: {msg}", file=sys.stderr)
    return 0 if not result.failures else 1


def cmd_sweep(args) -> int:
    base = _load(args)
    out = _out_dir(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    sizes = [int(s) for s in args.team_sizes.split(",") if s.strip()]
    results = []
    any_failures = False
    for n in sizes:
        for strategy in strategies:
            config = replace(base, n=n, strategy=strategy)
            config.validate()
            result = run_campaign(config, n_trials=args.trials, base_seed=args.seed)
            results.append(result)
            any_failures = any_failures or bool(result.failures)
            final_median = result.trp_quartiles[1, -1] if result.epochs.size else float("nan")
            print(f"{strategy} n={n}: {len(result.traces)}/{args.trials} trials ok, "
                  f"median final max-trace {final_median:.6g}")
            for seed, msg in result.failures:
                print(f"  seed {seed} failed: {msg}", file=sys.stderr)
    write_aggregate_csv(results, out / "aggregate_sweep.csv")
    if args.plots:
        emit_plots(results, out)
    return 1 if any_failures else 0


def _property_checks() -> list[tuple[str, bool, str]]:
    """Fast self-checks on small instances; each returns (name, ok, detail)."""
    from .config_gen import InfoSnapshot, solve
    from .dkf import run_consensus, to_info
    from .formation import FormationParams, constraints_ok, synthesize
    from .network import (Configuration, Topology, is_connected_bfs,
                          is_connected_spectral, line_graph, metropolis_matrix,
                          metropolis_weights)

    checks: list[tuple[str, bool, str]] = []
    rng = np.random.default_rng(0)

    agree = 0
    total = 100
    for _ in range(total):
        n = int(rng.integers(2, 7))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        keep = [p for p in pairs if rng.random() < 0.45]
        topo = Topology(n=n, edges=tuple(keep))
        cfg = Configuration(topology=topo, weights=metropolis_matrix(topo))
        agree += int(is_connected_bfs(topo) == is_connected_spectral(cfg, mu=1e-6))
    checks.append(("spectral-vs-bfs", agree == total, f"{agree}/{total} agree"))

    omegas = np.stack([np.eye(1) * 1.0, np.eye(1) * 2.0])
    snap = InfoSnapshot(info_matrices=omegas, deteriorated_id=0,
                        prev_config=metropolis_weights(line_graph(2)), n_e=0)
    rep = solve("tccg", snap)
    w01 = rep.chosen.weights[0, 1]
    ok = abs(w01 - 0.5) <= 1e-3 and abs(rep.objective_value - 2.0 / 3.0) <= 1e-4
    checks.append(("tccg-analytic-n2", ok,
                   f"w={w01:.6f} objective={rep.objective_value:.8f}"))

    pairs = [to_info(np.zeros(2), np.eye(2) * s) for s in (1.0, 2.0, 4.0)]
    net = metropolis_weights(line_graph(3))
    fused = run_consensus(pairs, net.weights, rounds=40)
    mats = np.stack([p.info_matrix for p in fused])
    spread = float(np.abs(mats - mats.mean(axis=0)).max())
    checks.append(("consensus-averaging", spread < 1e-6, f"spread={spread:.2e}"))

    topo = Topology(n=4, edges=((0, 1), (1, 2), (2, 3)))
    params = FormationParams(
        min_separation=5.0, comm_range=10.0, sensing_radii=np.full(4, 20.0),
        box_min=np.array([-100.0] * 3), box_max=np.array([100.0] * 3),
        trackers_in_range=frozenset(range(4)), target_pos=np.zeros(3))
    placement = synthesize(topo, params, rng=np.random.default_rng(1))
    ok, viol = constraints_ok(placement, topo, params)
    checks.append(("formation-feasible", ok, f"violations={len(viol)}"))
    return checks


def cmd_validate(args) -> int:
    config = _load(args)
    config.validate()
    if args.normalize:
        save_config(config, args.normalize)
        print(f"wrote normalized config to {args.normalize}")
    print("config ok")
    if args.skip_properties:
        return 0
    failures = 0
    for name, ok, detail in _property_checks():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrack",
        description="Resilient multi-robot target tracking simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one campaign and write CSV logs")
    sim.add_argument("--config", help="YAML scenario file (defaults built in)")
    sim.add_argument("--strategy", choices=("accg", "tccg", "greedy"),
                     help="override the config's strategy")
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0,
                     help="base seed; trial t uses seed + t")
    sim.add_argument("--out", help="output directory (or $RETRACK_OUT, default ./out)")
    sim.add_argument("--plots", action="store_true", help="also write PNG plots")
    sim.set_defaults(func=cmd_simulate)

    sweep = sub.add_parser("sweep", help="campaign over strategies x team sizes")
    sweep.add_argument("--config", help="YAML scenario file used as the base")
    sweep.add_argument("--strategies", default="accg,tccg,greedy")
    sweep.add_argument("--team-sizes", default="5,6,7")
    sweep.add_argument("--trials", type=int, default=20)
    sweep.add_argument("--seed", type=int, default=0,
                       help="base seed; trial t uses seed + t")
    sweep.add_argument("--out", help="output directory (or $RETRACK_OUT, default ./out)")
    sweep.add_argument("--plots", action="store_true")
    sweep.set_defaults(func=cmd_sweep)

    val = sub.add_parser(
        "validate", help="check a scenario file and run fast property suites")
    val.add_argument("--config", help="YAML scenario file (defaults built in)")
    val.add_argument("--normalize", help="write the normalized config to this path")
    val.add_argument("--skip-properties", action="store_true",
                     help="only validate the config, skip the self-checks")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
