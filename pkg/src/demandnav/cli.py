"""Command-line entry points: synth, validate, train-attr, eval, heatmap.

Precedence for settings: command-line flags override the --config file,
which overrides built-in defaults. All commands are deterministic under
fixed seeds; reports and logs carry no timestamps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .attributes.codebook import kmeans_init
from .attributes.embeddings import load_embeddings, save_embeddings
from .attributes.losses import LossWeights, TrainSample
from .attributes.model import init_model, load_model, save_model
from .attributes.training import train, write_loss_curve_csv
from .bench import BenchJob, run_benchmark
from .explorers.coarse import CoarsePolicyConfig
from .explorers.fine import FinePolicyConfig
from .mapping import load_pgm
from .metrics import report_to_dict, write_report
from .scene import (
    EpisodeSpec,
    has_errors,
    load_scene,
    load_tasks,
    save_scene,
    save_tasks,
    validate_tasks,
)
from .simulator import DetectorNoise
from .synth import SynthParams, synth_generate, training_samples
from .viz import render_heatmap


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _write_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    params = SynthParams(
        width=args.width, height=args.height, n_categories=args.categories,
        n_objects=args.objects, n_tasks=args.tasks, dim=args.dim,
    )
    try:
        scene, tasks, table = synth_generate(args.seed, params)
    except ValueError as exc:
        return _fail(str(exc))
    os.makedirs(args.out, exist_ok=True)
    save_scene(scene, os.path.join(args.out, "scene.json"))
    save_tasks(tasks, os.path.join(args.out, "tasks.json"))
    save_embeddings(table, os.path.join(args.out, "table.emb"))
    samples = training_samples(tasks, params)
    _write_json(
        [
            {
                "instruction_key": s.instruction_key,
                "object_key": s.object_key,
                "gt_instruction_attr_keys": list(s.gt_instruction_attr_keys),
                "gt_object_attr_keys": list(s.gt_object_attr_keys),
            }
            for s in samples
        ],
        os.path.join(args.out, "samples.json"),
    )
    print(
        f"wrote scene ({scene.width}x{scene.height}, {len(scene.objects)} objects), "
        f"{len(tasks)} tasks, {len(table)} embeddings, {len(samples)} samples to {args.out}"
    )
    return 0


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    try:
        scene = load_scene(args.scene)
        tasks, file_diags = load_tasks(args.tasks)
    except Exception as exc:
        return _fail(str(exc))
    diags = file_diags + validate_tasks(tasks, scene.categories)
    for d in diags:
        print(d)
    if has_errors(diags):
        return 1
    print(f"{len(tasks)} tasks valid against {len(scene.categories)} categories"
          + (f" ({len(diags)} warnings)" if diags else ""))
    return 0


# ---------------------------------------------------------------------------
# train-attr


def cmd_train_attr(args) -> int:
    try:
        table = load_embeddings(args.table)
        with open(args.samples, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except Exception as exc:
        return _fail(str(exc))
    samples = [
        TrainSample(
            instruction_key=r["instruction_key"],
            object_key=r["object_key"],
            gt_instruction_attr_keys=tuple(r["gt_instruction_attr_keys"]),
            gt_object_attr_keys=tuple(r["gt_object_attr_keys"]),
        )
        for r in raw
    ]
    if not samples:
        return _fail("sample file is empty")
    k1 = len(samples[0].gt_instruction_attr_keys)
    k2 = len(samples[0].gt_object_attr_keys)
    attr_vectors = np.stack(
        [vec for key, vec in table.entries.items() if key.startswith("attr:")]
    )
    try:
        codebook, _ = kmeans_init(attr_vectors, K=args.codebook_size, seed=args.seed)
        model = init_model(table.dim, k1, k2, codebook, seed=args.seed)
        trained, curve = train(
            samples, table, model, LossWeights(),
            lr=args.lr, epochs=args.epochs, seed=args.seed,
        )
    except (ValueError, KeyError, RuntimeError) as exc:
        return _fail(str(exc))
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    save_model(trained, args.out)
    if args.curve:
        write_loss_curve_csv(curve, args.curve)
    totals = curve.totals()
    print(f"trained {args.epochs} epochs on {len(samples)} samples; "
          f"loss {totals[0]:.4f} -> {totals[-1]:.4f}; model at {args.out}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    try:
        scenes = [load_scene(p) for p in args.scene]
        tasks, file_diags = load_tasks(args.tasks)
        vocab = set().union(*[s.categories for s in scenes]) if scenes else set()
        diags = file_diags + validate_tasks(tasks, vocab)
        if has_errors(diags):
            for d in diags:
                print(d, file=sys.stderr)
            return _fail("task validation failed")
        table = load_embeddings(args.table) if args.table else None
        model = load_model(args.model) if args.model else None
    except Exception as exc:
        return _fail(str(exc))
    if args.agent == "c2f" and table is None:
        return _fail("--table is required for the c2f agent")
    if args.agent == "c2f" and args.branch == "mlp" and model is None:
        return _fail("--model is required for the mlp branch")
    seeds = [int(s) for s in args.seeds.split(",") if s]
    spec = EpisodeSpec(
        d_find=args.dfind, n_find=args.nfind, n_step=args.nstep,
        detection_range=args.detection_range,
    )
    noise = None
    if args.miss_rate > 0 or args.mislabel_rate > 0:
        noise = DetectorNoise(args.miss_rate, args.mislabel_rate, seed=seeds[0])
    job = BenchJob(
        agent=args.agent, scenes=scenes, tasks=tasks, spec=spec, seeds=seeds,
        episodes_per_seed=args.episodes, table=table, model=model,
        coarse=CoarsePolicyConfig(r_b=args.rb, r_p=args.rp, branch=args.branch),
        fine=FinePolicyConfig(mode=args.fine_mode),
        noise=noise,
    )
    try:
        report, logs = run_benchmark(job, workers=args.workers, keep_logs=True)
    except (ValueError, RuntimeError) as exc:
        return _fail(str(exc))
    os.makedirs(args.out, exist_ok=True)
    write_report(report, os.path.join(args.out, "report.json"))
    for seed, ep_idx, log, coarse_events in logs:
        log_path = os.path.join(args.out, f"episode_{seed}_{ep_idx:04d}.jsonl")
        with open(log_path, "w", encoding="utf-8") as fh:
            for record in log:
                fh.write(json.dumps(record) + "\n")
        if coarse_events:
            _write_json(
                {"seed": seed, "episode": ep_idx, "phases": coarse_events},
                os.path.join(args.out, f"coarse_{seed}_{ep_idx:04d}.json"),
            )
    pooled = report_to_dict(report)["pooled"]
    print(
        f"agent={args.agent} episodes={report.n_episodes} "
        f"SR_b={pooled['sr_b']:.2f}% SR_p={pooled['sr_p']:.2f}% "
        f"SPL_b={pooled['spl_b']:.2f}% SPL_p={pooled['spl_p']:.2f}%"
    )
    return 0


# ---------------------------------------------------------------------------
# heatmap


def cmd_heatmap(args) -> int:
    try:
        with open(args.log, "r", encoding="utf-8") as fh:
            log_lines = [line for line in fh if line.strip()]
        with open(args.scores, "r", encoding="utf-8") as fh:
            coarse = json.load(fh)
    except Exception as exc:
        return _fail(str(exc))
    if not log_lines:
        return _fail("episode log is empty")
    phases = coarse.get("phases", [])
    if not phases:
        return _fail("no coarse phases in the scores file")
    if not (0 <= args.phase < len(phases)):
        return _fail(f"phase {args.phase} out of range (0..{len(phases) - 1})")
    map_img = None
    if args.map:
        try:
            map_img = load_pgm(args.map)
        except Exception as exc:
            return _fail(f"cannot read map snapshot: {exc}")
    svg = render_heatmap(phases[args.phase], map_img=map_img)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"wrote {args.out} (phase {args.phase}, "
          f"{len(phases[args.phase].get('scores', {}))} blocks)")
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demandnav",
        description="Desk-scale multi-object demand-driven navigation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene, tasks and embeddings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=40)
    p.add_argument("--height", type=int, default=40)
    p.add_argument("--categories", type=int, default=18)
    p.add_argument("--objects", type=int, default=30)
    p.add_argument("--tasks", type=int, default=10)
    p.add_argument("--dim", type=int, default=32)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="validate a task file against a scene's vocabulary")
    p.add_argument("tasks")
    p.add_argument("scene")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train-attr", help="train the attribute model")
    p.add_argument("--table", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--curve", default=None, help="loss-curve CSV path")
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--epochs", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--codebook-size", type=int, default=16)
    p.set_defaults(func=cmd_train_attr)

    p = sub.add_parser("eval", help="run a benchmark and write report + logs")
    p.add_argument("--config", default=None, help="JSON config supplying defaults")
    p.add_argument("--agent", choices=("c2f", "random", "fbe", "mopa"), default="c2f")
    p.add_argument("--scene", action="append", default=None, required=False)
    p.add_argument("--tasks", required=False)
    p.add_argument("--table", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--branch", choices=("mlp", "llm"), default="llm")
    p.add_argument("--fine-mode", choices=("scripted", "bc"), default="scripted")
    p.add_argument("--rb", type=float, default=1.0)
    p.add_argument("--rp", type=float, default=1.0)
    p.add_argument("--seeds", default="1,2,3")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--nstep", type=int, default=300)
    p.add_argument("--nfind", type=int, default=5)
    p.add_argument("--dfind", type=float, default=1.0)
    p.add_argument("--detection-range", type=float, default=5.0)
    p.add_argument("--miss-rate", type=float, default=0.0)
    p.add_argument("--mislabel-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("heatmap", help="render block-score ranks for one coarse phase")
    p.add_argument("log", help="episode step log (JSONL) from eval")
    p.add_argument("scores", help="coarse events JSON from a c2f episode")
    p.add_argument("--map", default=None, help="PGM map snapshot to draw underneath")
    p.add_argument("--out", required=True)
    p.add_argument("--phase", type=int, default=0)
    p.set_defaults(func=cmd_heatmap)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # Flags given on the command line win; the config file fills the rest.
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except Exception as exc:
            return _fail(f"cannot read config: {exc}")
        explicit = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
        for key, value in cfg.items():
            attr = key.replace("-", "_")
            if attr not in explicit and hasattr(args, attr):
                setattr(args, attr, value)
    if getattr(args, "command", None) == "eval":
        if not args.scene:
            return _fail("at least one --scene is required")
        if not args.tasks:
            return _fail("--tasks is required")
        if isinstance(args.scene, str):
            args.scene = [args.scene]
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
