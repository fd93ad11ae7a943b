"""Command-line entry points: train, eval, baseline, dump.

All commands are batch jobs with explicit inputs and outputs; nothing is
written outside the paths given on the command line. Exit codes: 0 on
success, 2 for bad usage (argparse), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import __version__, channel, checkpoint, evaluate, nn, train
from .config import ConfigError, TrainConfig, load_config
from .evaluate import BASELINE_SYSTEMS, SweepSpec
from .rng import substream
from .svg import line_chart

_SWEEP_KEYS = {"ebn0_db", "min_trials", "max_trials", "target_errors"}


def load_sweep(path: str) -> SweepSpec:
    """Parse a sweep spec JSON file; unknown keys are rejected."""
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read sweep spec {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("sweep spec must be a JSON object")
    unknown = sorted(set(data) - _SWEEP_KEYS)
    if unknown:
        raise ConfigError(f"unknown sweep keys: {', '.join(unknown)}")
    if "ebn0_db" not in data:
        raise ConfigError("sweep spec needs an 'ebn0_db' list")
    if not isinstance(data["ebn0_db"], list):
        raise ConfigError("ebn0_db: must be a list of numbers")
    kwargs = {"ebn0_db": tuple(data["ebn0_db"])}
    for key in ("min_trials", "max_trials", "target_errors"):
        if key in data:
            if isinstance(data[key], bool) or not isinstance(data[key], int):
                raise ConfigError(f"{key}: must be an integer")
            kwargs[key] = data[key]
    return SweepSpec(**kwargs)


def _use_color() -> bool:
    return sys.stdout.isatty() and not os.environ.get("NO_COLOR")


def _progress_printer(quiet: bool):
    if quiet:
        return None
    color = _use_color()

    def emit(iteration: int, phase: str, loss: float) -> None:
        shown = f"\x1b[36m{phase}\x1b[0m" if color else phase
        print(f"iter={iteration} phase={shown} loss={loss:.6f}", flush=True)

    return emit


def _write_manifest(out_dir: str, cfg: TrainConfig, outputs: list[str]) -> None:
    path = os.path.join(out_dir, "manifest.json")
    if os.path.exists(path):
        raise ConfigError(
            f"{path} already exists; refusing to overwrite a previous run"
        )
    manifest = {
        "command": "train",
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "package_version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "outputs": outputs,
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    outputs = sorted(checkpoint.CHECKPOINT_FILES) + ["config.json", "train_log.csv"]
    _write_manifest(args.out, cfg, outputs)
    train.train_full(cfg, out_dir=args.out, progress=_progress_printer(args.quiet))
    if not args.quiet:
        print(f"checkpoint written to {args.out}")
    return 0


def _maybe_svg(points, svg_path: str | None, label: str) -> None:
    if svg_path is None:
        return
    xs = [p.ebn0_db for p in points]
    ys = [p.bler for p in points]
    line_chart(
        svg_path, [(label, xs, ys)],
        title="Block error rate", xlabel="Eb/N0 (dB)", ylabel="BLER", log_y=True,
    )


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg, tx, rx, _, _ = checkpoint.load_system(args.checkpoint)
    spec = load_sweep(args.sweep)
    points = evaluate.bler_sweep_learned(
        tx, rx, cfg, spec, seed=args.seed, workers=args.workers
    )
    evaluate.bler_to_csv(points, args.out)
    _maybe_svg(points, args.svg, f"learned ({cfg.channel})")
    for p in points:
        print(f"ebn0_db={p.ebn0_db:g} bler={p.bler:.3e} trials={p.trials} "
              f"errors={p.errors}")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    spec = load_sweep(args.sweep)
    points = evaluate.bler_sweep_baseline(
        args.system, spec, seed=args.seed, workers=args.workers,
        n_pilot=args.n_pilot,
    )
    evaluate.bler_to_csv(points, args.out)
    _maybe_svg(points, args.svg, args.system)
    for p in points:
        print(f"ebn0_db={p.ebn0_db:g} bler={p.bler:.3e} trials={p.trials} "
              f"errors={p.errors}")
    return 0


def _cmd_dump(args: argparse.Namespace) -> int:
    cfg, tx, rx, g, _ = checkpoint.load_system(args.checkpoint)
    if args.what == "constellation":
        evaluate.constellation_dump(tx, args.out)
    else:
        x = tx.encode_messages(np.arange(cfg.M))
        std = channel.noise_std_from_snr(cfg.snr_train())
        h = None
        if cfg.is_fading:
            h = channel.rayleigh_sample(substream(args.seed, "dump", "h"), cfg.M)
        evaluate.gan_scatter_dump(
            g, x, std, args.out, n_samples=args.samples, seed=args.seed,
            h=h, n_pilot=cfg.n_pilot,
        )
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gancomm",
        description="End-to-end learned communication link trained through a "
                    "conditional-GAN channel surrogate.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a full system from a JSON config")
    p.add_argument("--config", required=True, help="JSON training config")
    p.add_argument("--out", required=True, help="output directory for the run")
    p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="BLER sweep of a trained checkpoint")
    p.add_argument("--checkpoint", required=True, help="training output directory")
    p.add_argument("--sweep", required=True, help="JSON sweep spec")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", help="optional SVG chart path")
    p.add_argument("--seed", type=int, default=None,
                   help="evaluation seed (default: the checkpoint's seed)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("baseline", help="BLER sweep of a classical reference")
    p.add_argument("--system", required=True, choices=BASELINE_SYSTEMS)
    p.add_argument("--sweep", required=True, help="JSON sweep spec")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", help="optional SVG chart path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--n-pilot", type=int, default=1, dest="n_pilot")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("dump", help="write constellation or GAN scatter CSVs")
    p.add_argument("--checkpoint", required=True, help="training output directory")
    p.add_argument("--what", required=True, choices=("constellation", "gan-scatter"))
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_dump)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (ConfigError, nn.NonFiniteError, FloatingPointError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
