"""Command-line entry point: ``artimanip <command> [--config FILE] [--set section.key=value ...]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..affordance import (
    ARCHETYPES,
    Hyper,
    f1_score,
    generate_part_library,
    load_model,
    predict_affordance,
    read_dataset,
    save_model,
    train_affordance,
    write_dataset,
)
from ..grounding import GroundingError, ground_part, gt_mask, image_ref, make_providers, mask_iou
from ..scene.objects import build_object
from ..scene.render import default_camera, render_observation
from .benchmark import display_name, report_from_log, run_benchmark
from .config import ConfigError, RunConfig, load_config


def _config(args) -> RunConfig:
    return load_config(args.config, args.set)


def cmd_gen_dataset(args) -> int:
    cfg = _config(args)
    archetypes = [a for a in args.archetypes.replace(",", " ").split() if a]
    data = generate_part_library(archetypes, args.count, args.seed, n_points=args.points)
    out = args.out or cfg.dataset_path
    write_dataset(data, out)
    print(data.statistics_table())
    print(f"wrote {len(data)} parts to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    data = read_dataset(args.dataset or cfg.dataset_path)
    hyper = Hyper(hidden=args.hidden, epochs=args.epochs, lr=args.lr, batch=args.batch, k=args.k)
    model, report = train_affordance(data, hyper, seed=args.seed)
    out = args.out or cfg.model_path or "model.bin"
    save_model(model, out)
    print(f"initial loss {report.initial_loss:.6f}  final loss {report.final_loss:.6f}  ({report.epochs} epochs)")
    print(f"wrote model to {out}")
    return 0


def cmd_eval_affordance(args) -> int:
    cfg = _config(args)
    model = load_model(args.model or cfg.model_path)
    data = read_dataset(args.dataset or cfg.dataset_path)
    preds, truth = {}, {}
    for e in data:
        p = predict_affordance(model, e.points).labels(cfg.threshold)
        preds.setdefault(e.archetype, []).append(p)
        truth.setdefault(e.archetype, []).append(e.labels)
    for a in preds:
        print(f"{a}: F1 {f1_score(np.concatenate(preds[a]), np.concatenate(truth[a])):.4f}")
    allp = np.concatenate([np.concatenate(v) for v in preds.values()])
    allt = np.concatenate([np.concatenate(v) for v in truth.values()])
    print(f"all: F1 {f1_score(allp, allt):.4f}")
    return 0


def cmd_eval_grounding(args) -> int:
    cfg = _config(args)
    providers = make_providers(cfg.providers)
    for cat in cfg.categories:
        ious, failures = [], 0
        for i in range(cfg.seeds):
            obj = build_object(cat, cfg.seed_offset + i)
            image = image_ref(render_observation(obj, default_camera(obj)), obj)
            try:
                res = ground_part(providers, image, f"open the {cat}")
                ious.append(mask_iou(res.mask, gt_mask(image)))
            except GroundingError:
                failures += 1
                ious.append(0.0)
        print(f"{display_name(cat)} | IoU {np.mean(ious):.3f} | failures {failures}/{cfg.seeds}")
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    report = run_benchmark(cfg)
    print(report.to_text(), end="")
    print(f"wrote {Path(cfg.output_dir)}")
    bad = report.violations(cfg.acceptance)
    for line in bad:
        print(f"threshold violated: {line}", file=sys.stderr)
    return 1 if bad else 0


def _logged_digest(path: Path) -> str:
    if not path.is_file():
        return ""
    first = path.read_text(encoding="utf-8").splitlines()[:1]
    return json.loads(first[0]).get("config_sha256", "") if first else ""


def cmd_report(args) -> int:
    cfg = _config(args)
    path = args.episodes or str(Path(cfg.output_dir) / "episodes.jsonl")
    digest = args.digest or _logged_digest(Path(path).with_name("report.jsonl"))
    report = report_from_log(path, digest)
    print(report.to_text(), end="")
    bad = report.violations(cfg.acceptance)
    for line in bad:
        print(f"threshold violated: {line}", file=sys.stderr)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config value")

    p = argparse.ArgumentParser(prog="artimanip", description="Articulated-object manipulation benchmark")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-dataset", parents=[common], help="generate a procedural part dataset")
    g.add_argument("--archetypes", default=",".join(ARCHETYPES))
    g.add_argument("--count", type=int, default=10, help="parts per archetype")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--points", type=int, default=512)
    g.add_argument("--out")
    g.set_defaults(fn=cmd_gen_dataset)

    t = sub.add_parser("train", parents=[common], help="train the affordance scorer")
    t.add_argument("--dataset")
    t.add_argument("--out")
    t.add_argument("--hidden", type=int, default=Hyper.hidden)
    t.add_argument("--epochs", type=int, default=Hyper.epochs)
    t.add_argument("--lr", type=float, default=Hyper.lr)
    t.add_argument("--batch", type=int, default=Hyper.batch)
    t.add_argument("--k", type=int, default=Hyper.k)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval-affordance", parents=[common], help="F1 of a model on a dataset")
    e.add_argument("--model")
    e.add_argument("--dataset")
    e.set_defaults(fn=cmd_eval_affordance)

    sub.add_parser("eval-grounding", parents=[common], help="mask IoU of the configured providers").set_defaults(fn=cmd_eval_grounding)
    sub.add_parser("run", parents=[common], help="run the benchmark and write reports").set_defaults(fn=cmd_run)

    r = sub.add_parser("report", parents=[common], help="recompute a report from an episode log")
    r.add_argument("--episodes")
    r.add_argument("--digest")
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
