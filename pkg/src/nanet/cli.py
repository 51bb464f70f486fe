"""Command-line pipeline: synth, train, eval, denoise, cam, report.

Successful commands print a one-line JSON summary to stdout (the `report`
subcommand instead renders a text table). Exit codes: 0 success, 1 usage
error, 2 runtime failure; failures print {"error": <name>, "message": ...}
to stderr.
"""

import argparse
import json
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import (
    CONDITIONS,
    DatasetManifest,
    RenderSpec,
    build_dataset,
    default_noise_specs,
    read_png,
    write_png,
)
from .errors import NanetError
from .evaluation import evaluate, export_denoised
from .gradcam import grad_cam
from .morse import LETTERS
from .training import preset_config, train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _cmd_synth(args):
    spec = RenderSpec(canvas=args.canvas)
    noise = default_noise_specs(args.uniform_amp, args.gauss_sigma, args.sp_p)
    manifest = build_dataset(
        spec, noise, args.seed, args.out, per_letter=args.per_letter, test_per_letter=args.test_per_letter
    )
    clean = sum(1 for it in manifest.items if it.condition == "clean")
    return {
        "command": "synth",
        "out": str(args.out),
        "seed": args.seed,
        "clean_images": clean,
        "noisy_images": len(manifest.items) - clean,
        "manifest": str(Path(args.out) / "manifest.json"),
    }


def _cmd_train(args):
    manifest = DatasetManifest.load(Path(args.data) / "manifest.json")
    cfg = preset_config(
        args.preset,
        mode=args.mode.replace("-", "_") if args.mode else None,
        seed=args.seed,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        image_size=args.image_size,
    )

    def progress(epoch, entry):
        print(
            f"epoch {epoch + 1}/{cfg.epochs}  mse {entry['mse']:.5f}  "
            f"ce {entry['ce']:.5f}  total {entry['total']:.5f}",
            file=sys.stderr,
            flush=True,
        )

    ckpt, history = train(manifest, cfg, progress=progress)
    save_checkpoint(ckpt.tensors, ckpt.configs, args.out)
    return {
        "command": "train",
        "mode": cfg.mode,
        "preset": args.preset,
        "epochs": cfg.epochs,
        "image_size": cfg.image_size,
        "seed": cfg.seed,
        "final_total_loss": round(history[-1]["total"], 6),
        "ckpt": str(args.out),
    }


def _cmd_eval(args):
    ckpt = load_checkpoint(args.ckpt)
    manifest = DatasetManifest.load(Path(args.data) / "manifest.json")
    report = evaluate(ckpt, manifest, conditions=args.conditions)
    report.save(args.report)
    return {
        "command": "eval",
        "report": str(args.report),
        "accuracy": {c: round(e["accuracy"], 2) for c, e in report.conditions.items()},
    }


def _cmd_denoise(args):
    ckpt = load_checkpoint(args.ckpt)
    manifest = DatasetManifest.load(Path(args.data) / "manifest.json")
    written = export_denoised(ckpt, manifest, CONDITIONS, args.out)
    return {"command": "denoise", "out": str(args.out), "written": written}


def _cmd_cam(args):
    ckpt = load_checkpoint(args.ckpt)
    image = read_png(args.image)
    heat = grad_cam(ckpt, image, target_class=args.target_class)
    write_png(args.out, heat)
    return {
        "command": "cam",
        "out": str(args.out),
        "target_class": args.target_class,
    }


def _cmd_report(args):
    try:
        data = json.loads(Path(args.infile).read_text())
    except OSError as e:
        raise NanetError(f"cannot read report {args.infile}: {e}") from e
    cols = ("accuracy", "precision", "recall", "f1", "psnr_noisy", "psnr_denoised")
    heads = ("Condition", "Accuracy(%)", "Precision(%)", "Recall(%)", "F1(%)", "PSNR in", "PSNR out")
    rows = [heads]
    for cond in CONDITIONS:
        if cond not in data:
            continue
        e = data[cond]
        row = [cond]
        for c in cols:
            v = e.get(c)
            row.append("-" if v is None else f"{v:.2f}")
        rows.append(tuple(row))
    widths = [max(len(r[i]) for r in rows) for i in range(len(heads))]
    for r in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip())
    return None


def build_parser() -> _Parser:
    p = _Parser(prog="nanet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate the synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", required=True, type=int)
    s.add_argument("--per-letter", type=int, default=40, dest="per_letter")
    s.add_argument("--test-per-letter", type=int, default=10, dest="test_per_letter")
    s.add_argument("--canvas", type=int, default=512)
    s.add_argument("--uniform-amp", type=float, default=0.3, dest="uniform_amp")
    s.add_argument("--gauss-sigma", type=float, default=0.2, dest="gauss_sigma")
    s.add_argument("--sp-p", type=float, default=0.1, dest="sp_p")
    s.set_defaults(func=_cmd_synth)

    t = sub.add_parser("train", help="train a model on the clean split")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--preset", required=True, choices=("paper", "desk"))
    t.add_argument("--mode", choices=("nanet", "classifier-only"), default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--batch", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--image-size", type=int, default=None, dest="image_size")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--report", required=True)
    e.add_argument("--conditions", nargs="+", choices=CONDITIONS, default=None)
    e.set_defaults(func=_cmd_eval)

    d = sub.add_parser("denoise", help="export autoencoder reconstructions")
    d.add_argument("--ckpt", required=True)
    d.add_argument("--data", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=_cmd_denoise)

    c = sub.add_parser("cam", help="write a Grad-CAM heatmap for one image")
    c.add_argument("--ckpt", required=True)
    c.add_argument("--image", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--class", choices=tuple(LETTERS), default=None, dest="target_class")
    c.set_defaults(func=_cmd_cam)

    r = sub.add_parser("report", help="render an eval report as a text table")
    r.add_argument("--in", required=True, dest="infile")
    r.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    try:
        summary = args.func(args)
    except Exception as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 2
    if summary is not None:
        print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
