"""Batch command-line entry points.

Every subcommand logs its resolved configuration and seed as one JSON line
on stderr, produces deterministic artifacts for identical inputs, and exits
0 on success, 1 on runtime failure, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import editing, evaluation
from .conditioning import (
    extract_conditions,
    load_condition_set,
    save_condition_set,
)
from .dataset import load_dataset
from .errors import ConfigError, PortraitGanError
from .networks import load_checkpoint
from .noising import NoiseConfig, apply_named_noising
from .raster import read_png, write_png
from .training import TrainConfig, train


def _log_invocation(command: str, config: dict) -> None:
    print(json.dumps({"command": command, "resolved": config}, sort_keys=True,
                     default=str), file=sys.stderr)


def _map_ordered(fn, items, jobs: int):
    """Run fn over items (possibly in parallel) preserving input order."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_extract(args) -> int:
    records = load_dataset(args.in_dir, args.resolution)
    out_root = Path(args.out_dir)

    def one(record):
        try:
            cond = extract_conditions(record.image, record.seg, beta=args.beta)
            target = save_condition_set(cond, out_root / record.image_id)
            # Keep the resized source image next to its conditions so
            # training and evaluation can run from this directory alone.
            write_png(record.image, target / "original.png")
            return record.image_id, None
        except PortraitGanError as exc:
            return record.image_id, str(exc)

    failures = 0
    for image_id, error in _map_ordered(one, records, args.jobs):
        if error is None:
            print(f"extracted {image_id}")
        else:
            failures += 1
            print(f"failed {image_id}: {error}", file=sys.stderr)
            if not args.keep_going:
                return 1
    print(f"{len(records) - failures}/{len(records)} condition sets written")
    return 0 if failures == 0 else 1


def cmd_noise_preview(args) -> int:
    edge = read_png(args.edge, "unit")
    cfg = NoiseConfig(alpha=args.alpha, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for index, method in enumerate(("identity", "removal", "shift", "lines")):
        rng = np.random.default_rng([args.seed, index])
        noisy = apply_named_noising(edge, method, cfg, rng)
        write_png(noisy, out / f"{method}.png")
        print(f"wrote {method}.png")
    return 0


def _load_samples(data_dir: str | None, conditions_dir: str | None,
                  resolution: int, beta: float):
    if conditions_dir:
        root = Path(conditions_dir)
        dirs = sorted(d for d in root.iterdir() if (d / "conditions.json").exists())
        samples = []
        for cond_dir in dirs:
            cond = load_condition_set(cond_dir)
            image_path = cond_dir / "original.png"
            if not image_path.exists():
                raise ConfigError(f"{cond_dir} has no original.png; re-run extract")
            samples.append((cond, read_png(image_path, "byte")))
        return samples
    if not data_dir:
        raise ConfigError("either --data or --conditions is required")
    records = load_dataset(data_dir, resolution)
    return [
        (extract_conditions(r.image, r.seg, beta=beta), r.image) for r in records
    ]


def cmd_train(args) -> int:
    cfg = TrainConfig.from_yaml(args.config) if args.config else TrainConfig()
    _log_invocation("train", {"config": asdict(cfg), "seed": cfg.seed})
    samples = _load_samples(args.data, args.conditions, cfg.resolution, args.beta)
    state = train(samples, cfg, args.out_dir, resume_from=args.resume,
                  max_steps=args.max_steps)
    print(f"trained {state.step} steps; checkpoints under {args.out_dir}/checkpoints")
    return 0


def _condition_dirs(path: Path) -> list[Path]:
    if (path / "conditions.json").exists():
        return [path]
    return sorted(d for d in path.iterdir() if (d / "conditions.json").exists())


def cmd_generate(args) -> int:
    bundle, _ = load_checkpoint(args.checkpoint)
    out_root = Path(args.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    cond_dirs = _condition_dirs(Path(args.conditions))
    if not cond_dirs:
        raise ConfigError(f"no condition sets under {args.conditions}")

    def one(cond_dir: Path):
        cond = load_condition_set(cond_dir)
        image = editing.generate(bundle, cond)
        target = out_root / f"{cond_dir.name}.png"
        write_png(image, target)
        return target.name

    for name in _map_ordered(one, cond_dirs, args.jobs):
        print(f"generated {name}")
    return 0


def cmd_edit(args) -> int:
    bundle, _ = load_checkpoint(args.checkpoint)
    script = editing.EditScript.from_json(Path(args.script).read_text())
    cond_dirs = _condition_dirs(Path(args.conditions))
    conds = [load_condition_set(d) for d in cond_dirs]
    out_root = Path(args.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    results = editing.batch_edit(bundle, conds, script)
    failures = 0
    for cond_dir, result in zip(cond_dirs, results):
        if result.ok:
            write_png(result.image, out_root / f"{cond_dir.name}.png")
            print(f"edited {cond_dir.name}")
        else:
            failures += 1
            print(f"failed {cond_dir.name}: {result.error}", file=sys.stderr)
    return 0 if failures == 0 else 1


def cmd_transfer(args) -> int:
    from .raster import read_seg_png

    cond = load_condition_set(args.conditions)
    reference = (read_png(args.reference, "byte"), read_seg_png(args.reference_seg))
    updated = editing.apply_color_transfer(cond, reference, args.strip_width)
    out_dir = Path(args.out_dir)
    save_condition_set(updated, out_dir)
    print(f"wrote transferred conditions to {out_dir}")
    if args.checkpoint:
        bundle, _ = load_checkpoint(args.checkpoint)
        image = editing.generate(bundle, updated)
        write_png(image, out_dir / "generated.png")
        print("wrote generated.png")
    return 0


def _build_eval_items(data_dir: str, resolution: int, beta: float):
    records = load_dataset(data_dir, resolution)
    items = []
    for record in records:
        cond = extract_conditions(record.image, record.seg, beta=beta)
        items.append(evaluation.EvalItem(
            item_id=record.image_id, cond=cond, image=record.image, seg=record.seg))
    return items


def cmd_eval(args) -> int:
    models = {}
    for spec in args.checkpoint:
        if "=" not in spec:
            raise ConfigError(f"--checkpoint needs NAME=PATH, got {spec!r}")
        name, path = spec.split("=", 1)
        models[name], _ = load_checkpoint(path)
    if not models:
        raise ConfigError("at least one --checkpoint NAME=PATH is required")
    items = _build_eval_items(args.test_data, args.resolution, args.beta)
    _log_invocation("eval", {
        "models": list(models), "items": len(items), "seed": args.seed,
    })

    report = evaluation.AblationReport()
    if args.mode in ("edges", "both"):
        report.merge(evaluation.run_edge_robustness_ablation(
            models, items, args.seed))
    if args.mode in ("color", "both"):
        if len(models) == 2:
            (name_a, bundle_a), (name_b, bundle_b) = models.items()
            report.merge(evaluation.run_color_ablation(
                (name_a, bundle_a), (name_b, bundle_b), items, args.seed))
        else:
            print("color ablation needs exactly 2 checkpoints; skipped",
                  file=sys.stderr)
    if args.pred_seg:
        from .raster import read_seg_png

        scores = []
        for item in items:
            pred_path = Path(args.pred_seg) / f"{item.item_id}.png"
            if item.seg is None or not pred_path.exists():
                continue
            table = evaluation.f1_table(read_seg_png(pred_path), item.seg)
            scores.append(table)
        if scores:
            merged = {
                str(c): float(np.mean([s[c] for s in scores]))
                for c in scores[0]
            }
            report.sections["segmentation_f1"] = {"f1": merged, "items": len(scores)}
    report.write(args.out_dir)
    print(report.to_text())
    print(f"report written to {args.out_dir}")
    return 0


def cmd_report(args) -> int:
    report = evaluation.AblationReport.from_json(Path(args.in_path).read_text())
    report.write(args.out_dir)
    print(report.to_text())
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig.load(args.config)
    if args.checkpoint:
        config = ServiceConfig(**{**asdict(config), "checkpoint_path": args.checkpoint})
    if args.port:
        config = ServiceConfig(**{**asdict(config), "port": args.port})
    _log_invocation("serve", asdict(config))
    serve(config)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portraitgan",
        description="Portrait conditioning, training, editing and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute condition sets for a dataset")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--beta", type=float, default=0.35)
    p.add_argument("--keep-going", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("noise-preview", help="write each noising regime for one edge map")
    p.add_argument("edge")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.33)
    p.set_defaults(fn=cmd_noise_preview)

    p = sub.add_parser("train", help="train from a dataset or condition dirs")
    p.add_argument("--config", help="YAML training config")
    p.add_argument("--data", help="dataset root (images/ + masks/)")
    p.add_argument("--conditions", help="directory of persisted condition sets")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--resume", help="train-state checkpoint to resume from")
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--beta", type=float, default=0.35)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("generate", help="reconstruct images from condition sets")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--conditions", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("edit", help="apply an edit script and generate")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--conditions", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_edit)

    p = sub.add_parser("transfer", help="reference-based distribution-palette transfer")
    p.add_argument("--conditions", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--reference-seg", required=True)
    p.add_argument("--strip-width", type=int, default=16)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--checkpoint")
    p.set_defaults(fn=cmd_transfer)

    p = sub.add_parser("eval", help="run the ablation harnesses")
    p.add_argument("--checkpoint", action="append", default=[],
                   metavar="NAME=PATH")
    p.add_argument("--test-data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("color", "edges", "both"), default="both")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--beta", type=float, default=0.35)
    p.add_argument("--pred-seg", help="directory of predicted label PNGs for F1")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="render a saved report JSON to text and CSV")
    p.add_argument("in_path")
    p.add_argument("out_dir")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP editing service")
    p.add_argument("--config", help="YAML service config")
    p.add_argument("--checkpoint")
    p.add_argument("--port", type=int)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _log_invocation(args.command, {
        k: v for k, v in vars(args).items() if k != "fn" and v is not None
    })
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PortraitGanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
