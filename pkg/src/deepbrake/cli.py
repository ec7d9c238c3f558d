"""Command-line entry point.

Subcommands::

    train          train a DQN, write checkpoint.bin and episodes.csv
    eval-ttc       collision rate per TTC (plus optional stay/gap studies)
    eval-ncap      simplified Euro NCAP CVFA/CVNA table
    trace          one episode's trajectory, row per 0.1 s step
    ablate-trauma  same-seed training with and without trauma memory

Tables are written as CSV to the output directory (``--out``, else
``$DEEPBRAKE_OUTPUT_DIR``, else the current directory).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import Config, ConfigError, format_config, load_config
from .env import Action, Scenario, ScenarioParams, Side
from .evaluation import (
    TABLE1_TTCS, infeasible_fraction, ncap_suite, stay_liveness, stopping_gap_stats,
    trace_episode, ttc_sweep,
)
from .trainer import ConstantPolicy, GreedyPolicy, moving_average, train

log = logging.getLogger("deepbrake")

OUTPUT_ENV = "DEEPBRAKE_OUTPUT_DIR"
SMOOTHING_WINDOW = 200


class CommandError(Exception):
    pass


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_table(path: Path, rows: list[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, rows)
    return path


def _write_rows(fh, rows):
    if not rows:
        return
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})


def echo_table(rows):
    buf = io.StringIO()
    _write_rows(buf, rows)
    sys.stdout.write(buf.getvalue())


def echo_config(cfg: Config):
    print("# resolved config")
    for line in format_config(cfg).splitlines():
        print(f"# {line}")


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUTPUT_ENV) or ".")


def _training_config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    changes = {}
    if args.episodes is not None:
        changes["episodes"] = args.episodes
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "no_trauma", False):
        changes["trauma"] = False
    return cfg.replace(**changes)


def _policy(args):
    """(policy, config) from --stub or --checkpoint."""
    if args.stub:
        cfg = load_config(args.config) if args.config else Config()
        return ConstantPolicy(Action[args.stub.upper()]), cfg
    path = Path(args.checkpoint or _out_dir(args) / "checkpoint.bin")
    if not path.exists():
        raise CommandError(f"checkpoint not found: {path} (run `deepbrake train` first)")
    ckpt = load_checkpoint(path)
    return GreedyPolicy(ckpt.params, ckpt.config.leaky_slope), ckpt.config


def _progress(every):
    def report(ep, agent):
        if (ep.index + 1) % every == 0:
            log.info("episode %d  outcome=%s  return=%.3f  eps=%.3f  replay=%d  trauma=%d",
                     ep.index + 1, ep.outcome, ep.ret, ep.epsilon, len(agent.replay),
                     len(agent.trauma))
    return report


def _episode_rows(logs):
    smooth = moving_average([ep.ret for ep in logs], SMOOTHING_WINDOW)
    return [dict(ep.row(), smoothed_ret=float(s)) for ep, s in zip(logs, smooth)]


def cmd_train(args):
    cfg = _training_config(args)
    echo_config(cfg)
    result = train(cfg, _progress(args.log_every))
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = Path(args.checkpoint or out / "checkpoint.bin")
    save_checkpoint(ckpt, result.params, result.agent.opt, cfg)
    write_table(out / "episodes.csv", _episode_rows(result.logs))
    print(f"checkpoint: {ckpt}")
    print(f"episode log: {out / 'episodes.csv'} ({len(result.logs)} episodes)")
    if result.logs:
        tail = [ep.ret for ep in result.logs[-500:]]
        print(f"mean return over last {len(tail)} episodes: {np.mean(tail):.4f}")
    return 0


def cmd_eval_ttc(args):
    policy, cfg = _policy(args)
    echo_config(cfg)
    rng = np.random.default_rng(args.seed)
    ttcs = args.ttc or TABLE1_TTCS
    results = ttc_sweep(policy, ttcs, args.trials, cfg, rng)
    bound_rng = np.random.default_rng(args.seed + 1)
    rows = [dict(r.row(), infeasible_mc_pct=round(100 * infeasible_fraction(
        r.ttc, cfg, bound_rng), 4)) for r in results]
    out = _out_dir(args)
    write_table(out / "ttc_sweep.csv", rows)
    echo_table(rows)
    if args.stay:
        lv = stay_liveness(policy, args.stay, cfg, rng)
        row = {"episodes": lv.episodes, "passes": lv.passes, "full_stops": lv.full_stops,
               "pass_rate": lv.pass_rate, **{f"n_{k.lower()}": v for k, v in lv.outcomes.items()}}
        write_table(out / "stay_liveness.csv", [row])
        echo_table([row])
    if args.gaps:
        gs = stopping_gap_stats(policy, args.gaps, cfg, rng)
        write_table(out / "stopping_gaps.csv", [{"gap_m": float(g)} for g in gs.gaps])
        echo_table([gs.summary])
    return 0


def cmd_eval_ncap(args):
    policy, cfg = _policy(args)
    echo_config(cfg)
    rows = [c.row() for c in ncap_suite(policy, cfg)]
    write_table(_out_dir(args) / "ncap.csv", rows)
    echo_table(rows)
    return 0


def cmd_trace(args):
    policy, cfg = _policy(args)
    echo_config(cfg)
    params = ScenarioParams.build(cfg, args.v_init, args.ttc, Side(args.side),
                                  Scenario(args.scenario), args.v_ped)
    rng = np.random.default_rng(args.seed)
    rows = trace_episode(policy, params, cfg, rng, sensor_noise=args.noise)
    write_table(_out_dir(args) / "trace.csv", rows)
    echo_table(rows)
    return 0


def cmd_ablate(args):
    base = _training_config(args)
    echo_config(base)
    out = _out_dir(args)
    summary = []
    for enabled in (True, False):
        cfg = base.replace(trauma=enabled)
        tag = "on" if enabled else "off"
        log.info("training with trauma memory %s", tag)
        result = train(cfg, _progress(args.log_every))
        rows = _episode_rows(result.logs)
        write_table(out / f"episodes_trauma_{tag}.csv", rows)
        window = [r["smoothed_ret"] for r in rows[-args.window:]]
        summary.append({"trauma": tag, "episodes": len(rows), "window": len(window),
                        "smoothed_mean": float(np.mean(window)) if window else float("nan"),
                        "smoothed_var": float(np.var(window)) if window else float("nan"),
                        "bumps": sum(r["outcome"] == "Bump" for r in rows),
                        "trauma_reads": result.agent.trauma.reads})
    write_table(out / "ablation_summary.csv", summary)
    echo_table(summary)
    return 0


def _csv_floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepbrake", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
        p.add_argument("--config", help="key = value config file")

    def training(p):
        common(p)
        p.add_argument("--episodes", type=int)
        p.add_argument("--seed", type=int, help="training seed")
        p.add_argument("--log-every", type=int, default=100)

    def evaluating(p):
        common(p)
        p.add_argument("--checkpoint", help="default: <out>/checkpoint.bin")
        p.add_argument("--stub", choices=[a.name.lower() for a in Action],
                       help="evaluate a constant-action policy instead of a checkpoint")
        p.add_argument("--seed", type=int, default=0, help="evaluation seed")

    p = sub.add_parser("train", help="train and save a checkpoint")
    training(p)
    p.add_argument("--checkpoint", help="default: <out>/checkpoint.bin")
    p.add_argument("--no-trauma", action="store_true", help="disable trauma memory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-ttc", help="collision rate per TTC")
    evaluating(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--ttc", type=_csv_floats, help="comma-separated TTC values")
    p.add_argument("--stay", type=int, default=0, help="also run N stay-scenario episodes")
    p.add_argument("--gaps", type=int, default=0, help="also collect N crossing stop gaps")
    p.set_defaults(func=cmd_eval_ttc)

    p = sub.add_parser("eval-ncap", help="simplified Euro NCAP CVFA/CVNA table")
    evaluating(p)
    p.set_defaults(func=cmd_eval_ncap)

    p = sub.add_parser("trace", help="trajectory of one episode")
    evaluating(p)
    p.add_argument("--ttc", type=float, default=1.5)
    p.add_argument("--v-init", type=float, default=13.89)
    p.add_argument("--v-ped", type=float, default=3.0)
    p.add_argument("--side", choices=[s.value for s in Side], default="near")
    p.add_argument("--scenario", choices=[s.value for s in Scenario], default="cross")
    p.add_argument("--noise", type=float, default=0.0, help="sensor noise sigma (m)")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("ablate-trauma", help="train with and without trauma memory")
    training(p)
    p.add_argument("--window", type=int, default=1000,
                   help="final episodes compared in the summary")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (CommandError, ConfigError, CheckpointError, FloatingPointError, OSError) as exc:
        print(f"deepbrake {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
