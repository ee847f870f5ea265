"""Command-line experiment runner.

    mechanic-forge run --config exp.yaml [--seed N] [--evaluator rl]
    mechanic-forge compare runlog-a.jsonl runlog-b.jsonl --out reports
    mechanic-forge replay trace.json --out strip.txt --format ascii
    mechanic-forge usage-curve record.json --out curve.csv

Exit codes: 0 success, 2 bad config or arguments, 3 no feasible rule found
for any seed, 4 insufficient rule pool, 5 replay divergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, save_config
from .level import load_default_level, load_level
from .metrics import make_pool_report, pool_similarity
from .replay import ReplayDivergence, frames_to_records, render_ascii, render_svg, replay
from .runio import (SequenceStore, append_jsonl, entry_from_report, final_marker,
                    success_actions, trace_to_dict, training_record_to_dict,
                    write_jsonl)
from .rules import parse_rule
from .search import NoFeasibleRuleFound, run_generation
from .sim import Action


class InsufficientPool(RuntimeError):
    pass


def generation_seed(seed: int, generation: int) -> int:
    """Stable per-generation seed derived from the run seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(generation,))
    return int(ss.generate_state(1)[0])


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.evaluator is not None:
        overrides["evaluators"] = (args.evaluator,)
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.max_generations is not None:
        overrides["max_generations"] = args.max_generations
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)

    level = cfg.load_level_spec()
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_config(cfg, outdir / "effective-config.yaml")

    summary_rows = []
    succeeded = 0
    for kind in cfg.evaluators:
        for seed in cfg.seeds:
            log_path = outdir / f"runlog-{kind}-seed{seed}.jsonl"
            seq_path = outdir / f"sequences-{kind}-seed{seed}.jsonl"
            write_jsonl(log_path, [])
            write_jsonl(seq_path, [])
            store = SequenceStore(seq_path)

            def sink(report, _seed=seed, _log=log_path, _store=store):
                actions = success_actions(report)
                ref = _store.append(actions) if actions is not None else None
                append_jsonl(_log, entry_from_report(report, _seed, ref))

            for gen in range(cfg.max_generations):
                scfg = dataclasses.replace(
                    cfg.search, seed=generation_seed(seed, gen),
                    balance_weight=cfg.balance_weight)
                t0 = time.perf_counter()
                try:
                    trace = run_generation(
                        kind, level, scfg, astar_budget=cfg.astar_budget,
                        learner=cfg.learner, rew=cfg.reward,
                        lower_is_better=cfg.lower_is_better, sink=sink)
                except NoFeasibleRuleFound:
                    summary_rows.append(
                        [kind, seed, gen, "", "", "no-feasible-rule"])
                    continue
                wall = time.perf_counter() - t0
                succeeded += 1
                append_jsonl(log_path, final_marker(trace.final_report, seed, gen))
                actions = success_actions(trace.final_report)
                trace_path = outdir / f"trace-{kind}-seed{seed}-gen{gen}.json"
                trace_path.write_text(json.dumps(
                    trace_to_dict(trace, seed, gen, kind, cfg.level, actions),
                    indent=2, sort_keys=True) + "\n")
                if kind == "rl":
                    rec_path = outdir / f"record-{kind}-seed{seed}-gen{gen}.json"
                    rec_path.write_text(json.dumps(
                        training_record_to_dict(trace.final_report.stats),
                        indent=2, sort_keys=True) + "\n")
                summary_rows.append(
                    [kind, seed, gen, trace.final_rule and str(trace_path.name),
                     f"{trace.final_report.fitness:.4f}", "ok"])
                print(f"{kind} seed={seed} gen={gen}: "
                      f"rule '{summary_label(trace)}' "
                      f"fitness={trace.final_report.fitness:.3f} "
                      f"({wall:.1f}s)")

    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["evaluator", "seed", "generation", "trace",
                         "fitness", "status"])
        writer.writerows(summary_rows)
    if succeeded == 0:
        print("no feasible rule found for any seed", file=sys.stderr)
        return 3
    return 0


def summary_label(trace) -> str:
    from .rules import format_rule
    return format_rule(trace.final_rule)


def _final_pool(log_path: str, pool_size: int, rng):
    entries = []
    with open(log_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    finals = {}
    for entry in entries:
        if entry.get("role") == "final" and entry.get("feasible"):
            finals.setdefault(entry["rule"], entry)
    if len(finals) < pool_size:
        raise InsufficientPool(
            f"{log_path} holds {len(finals)} unique final rules; "
            f"{pool_size} required (use --pool to lower)")
    texts = sorted(finals)
    picked = [texts[i] for i in
              sorted(rng.choice(len(texts), size=pool_size, replace=False))]
    rules = [parse_rule(t) for t in picked]
    usage = {t: (finals[t].get("usage") or {}).get("NewRule", 0.0)
             for t in picked}
    return rules, usage


def cmd_compare(args) -> int:
    rng = np.random.default_rng(args.seed)
    pool_a, usage_a = _final_pool(args.log_a, args.pool, rng)
    pool_b, usage_b = _final_pool(args.log_b, args.pool, rng)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    agg_aa, mean_aa = pool_similarity(pool_a, pool_a)
    agg_bb, mean_bb = pool_similarity(pool_b, pool_b)
    agg_ab, mean_ab = pool_similarity(pool_a, pool_b)
    with open(outdir / "sim.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "aggregate", "mean_pairwise"])
        writer.writerow(["AvsA", f"{agg_aa:.4f}", f"{mean_aa:.6f}"])
        writer.writerow(["BvsB", f"{agg_bb:.4f}", f"{mean_bb:.6f}"])
        writer.writerow(["AvsB", f"{agg_ab:.4f}", f"{mean_ab:.6f}"])

    report_a = make_pool_report(pool_a, usage_a)
    report_b = make_pool_report(pool_b, usage_b)
    with open(outdir / "usage.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pool", "rule", "new_rule_pct"])
        for label, table in (("A", usage_a), ("B", usage_b)):
            for text, pct in table.items():
                writer.writerow([label, text, f"{pct:.2f}"])
    with open(outdir / "breakdown.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pool", "variable", "pct"])
        for label, rep in (("A", report_a), ("B", report_b)):
            for var, pct in rep.variable_breakdown.items():
                writer.writerow([label, var, f"{pct:.2f}"])

    from .metrics import format_pool_table
    text = [
        "pair      mean_pairwise",
        f"AvsA      {mean_aa:13.4f}",
        f"BvsB      {mean_bb:13.4f}",
        f"AvsB      {mean_ab:13.4f}",
        "",
        "== pool A ==", format_pool_table(report_a),
        "== pool B ==", format_pool_table(report_b),
    ]
    (outdir / "report.txt").write_text("\n".join(text) + "\n")
    print(f"AvsA {mean_aa:.4f}  BvsB {mean_bb:.4f}  AvsB {mean_ab:.4f}")
    return 0


def cmd_replay(args) -> int:
    trace = json.loads(Path(args.trace).read_text())
    info = trace.get("replay")
    if not info:
        print("trace has no replayable action sequence", file=sys.stderr)
        return 2
    if trace.get("level", "default") == "default":
        level = load_default_level()
    else:
        level = load_level(trace["level"])
    rule = parse_rule(trace["final_rule"])
    frames = replay(level, rule, [Action(a) for a in info["actions"]],
                    expect_goal=info.get("reached", True))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "svg":
        out.write_text(render_svg(level, frames))
    else:
        out.write_text(render_ascii(level, frames))
    records_path = out.parent / (out.stem + ".frames.jsonl")
    write_jsonl(records_path, frames_to_records(frames))
    print(f"replayed {len(frames) - 1} ticks -> {out} and {records_path}")
    return 0


def cmd_usage_curve(args) -> int:
    record = json.loads(Path(args.record).read_text())
    series = record.get("episode_rule_uses", [])
    if len(series) < 2:
        print("record holds fewer than 2 episodes", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "new_rule_uses"])
        for i, uses in enumerate(series):
            writer.writerow([i, uses])
    print(f"wrote {len(series)} rows -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mechanic-forge",
        description="Generate and evaluate platformer rule mechanics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run seeded generation experiments")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--evaluator", choices=["astar", "rl"])
    p_run.add_argument("--out")
    p_run.add_argument("--max-generations", type=int, dest="max_generations")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare two run logs' rule pools")
    p_cmp.add_argument("log_a")
    p_cmp.add_argument("log_b")
    p_cmp.add_argument("--pool", type=int, default=12)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--out", default="compare_reports")
    p_cmp.set_defaults(func=cmd_compare)

    p_rep = sub.add_parser("replay", help="re-simulate and render a trace")
    p_rep.add_argument("trace")
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--format", choices=["ascii", "svg"], default="ascii")
    p_rep.set_defaults(func=cmd_replay)

    p_use = sub.add_parser("usage-curve", help="per-episode rule use as CSV")
    p_use.add_argument("record")
    p_use.add_argument("--out", required=True)
    p_use.set_defaults(func=cmd_usage_curve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InsufficientPool as exc:
        print(f"insufficient pool: {exc}", file=sys.stderr)
        return 4
    except ReplayDivergence as exc:
        print(f"replay divergence: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
