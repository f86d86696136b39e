"""Command line entry point.

Exit codes: 0 on success, 1 on runtime or numeric failures, 2 on usage and
configuration errors.
"""

import argparse
import os.path as osp
import sys
from functools import partial
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence

import toml
from tqdm import tqdm

from .common.logger import logger, set_level
from .common.typing import GranConfig, NetConfig
from .common.utils import (
    ConfigError,
    ConfigValue,
    config_to_text,
    list_files,
    load_gran_config,
    parse_config,
)
from .complexity.analyzer import (
    DEFAULT_INPUT_HW,
    VARIANTS,
    analyze,
    apply_variant,
    render_kv,
    render_table,
    summarize,
    variant_name,
)
from .core.tensor import Tensor
from .data.dataset import PatchDataset
from .eval.metrics import eval_dataset, render_result, write_csv
from .imaging.io import Image, from_nchw, load_png, save_png
from .imaging.resize import bicubic_resize, modcrop
from .model.checkpoint import CheckpointError, load
from .model.gradcheck import SIZES, render_rows, run_gradcheck
from .model.gran import GRAN, build
from .train.trainer import resume, train_loop

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    """Arguments are inconsistent with each other or with the inputs."""


def parse_overrides(items: Sequence[str]) -> Dict[str, ConfigValue]:
    """`section.key=value` flags, values parsed as TOML."""
    overrides: Dict[str, ConfigValue] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(
                "override {} must look like section.key=value".format(item)
            )
        key, text = item.split("=", 1)
        try:
            value = toml.loads("value = {}".format(text))["value"]
        except toml.TomlDecodeError:
            value = text
        overrides[key.strip()] = value
    return overrides


def parse_arguments(
    argv: Optional[Sequence[str]] = None,
) -> argparse.Namespace:
    """Parse arguments."""
    parser = argparse.ArgumentParser(
        prog="gran", description="Ghost residual attention SR toolkit"
    )
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="package log level, overrides GRAN_LOG_LEVEL",
    )
    subparsers = parser.add_subparsers(dest="cmd", required=True)

    analyze_parser = subparsers.add_parser(
        "analyze", help="count parameters and MACs"
    )
    analyze_parser.add_argument(
        "--config", "-c", default="gran", help="config file or preset name"
    )
    analyze_parser.add_argument(
        "--variant", choices=sorted(VARIANTS), help="ablation preset"
    )
    analyze_parser.add_argument(
        "--reference",
        choices=sorted(VARIANTS),
        help="variant to compare against, ab1 by default",
    )
    analyze_parser.add_argument(
        "--input-size",
        type=int,
        nargs=2,
        default=list(DEFAULT_INPUT_HW),
        metavar=("H", "W"),
        help="LR input size",
    )
    analyze_parser.add_argument(
        "--mode", choices=["depthwise", "dense"], default="depthwise"
    )
    analyze_parser.add_argument(
        "--faithful",
        action="store_true",
        help="leave attention layers out of the counts",
    )
    analyze_parser.add_argument(
        "--double-macs",
        action="store_true",
        help="count multiplies and adds separately",
    )
    analyze_parser.add_argument(
        "--format", choices=["table", "kv"], default="table"
    )
    analyze_parser.add_argument(
        "--per-layer", action="store_true", help="print every layer"
    )

    degrade_parser = subparsers.add_parser(
        "degrade", help="bicubic LR images from HR images"
    )
    degrade_parser.add_argument("hr_dir")
    degrade_parser.add_argument("out_dir")
    degrade_parser.add_argument("--scale", "-s", type=int, required=True)
    degrade_parser.add_argument(
        "--sr-dir",
        default=None,
        help="also write the LR images upscaled back by bicubic",
    )
    degrade_parser.add_argument(
        "--nproc", type=int, default=4, help="number of processes"
    )

    train_parser = subparsers.add_parser("train", help="train a model")
    train_parser.add_argument(
        "--config", "-c", default="gran", help="config file or preset name"
    )
    train_parser.add_argument("--data-dir", "-d", required=True)
    train_parser.add_argument(
        "--manifest", default=None, help="image list relative to data dir"
    )
    train_parser.add_argument("--out-dir", "-o", required=True)
    train_parser.add_argument(
        "--resume", default=None, help="training checkpoint to continue"
    )
    train_parser.add_argument("--seed", type=int, default=None)
    train_parser.add_argument("--steps", type=int, default=None)
    train_parser.add_argument(
        "--strict",
        action="store_true",
        help="serial, bit-exact reproducible execution",
    )
    train_parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value",
    )

    infer_parser = subparsers.add_parser(
        "infer", help="super-resolve LR images"
    )
    infer_parser.add_argument("checkpoint")
    infer_parser.add_argument(
        "inputs", nargs="+", help="LR PNG files or folders"
    )
    infer_parser.add_argument("--out-dir", "-o", required=True)
    infer_parser.add_argument(
        "--scale", "-s", type=int, default=None, help="expected scale"
    )

    eval_parser = subparsers.add_parser(
        "eval", help="PSNR and SSIM on the Y channel"
    )
    eval_parser.add_argument("sr_dir")
    eval_parser.add_argument("hr_dir")
    eval_parser.add_argument("--scale", "-s", type=int, required=True)
    eval_parser.add_argument(
        "--crop", type=int, default=None, help="border width, scale default"
    )
    eval_parser.add_argument("--csv", default=None, help="CSV output path")
    eval_parser.add_argument(
        "--nproc", type=int, default=4, help="number of processes"
    )

    gradcheck_parser = subparsers.add_parser(
        "gradcheck", help="finite-difference gradient checks"
    )
    gradcheck_parser.add_argument(
        "--size", choices=sorted(SIZES), default="tiny"
    )
    gradcheck_parser.add_argument(
        "--seeds", type=int, default=10, help="number of random seeds"
    )
    return parser.parse_args(argv)


def cmd_analyze(args: argparse.Namespace) -> int:
    """Print the complexity report."""
    net = load_gran_config(args.config).net
    if args.variant is not None:
        net = apply_variant(net, args.variant)
    reference: Optional[NetConfig] = None
    if args.reference is not None:
        reference = apply_variant(net, args.reference)
    elif variant_name(net) != "ab1":
        reference = apply_variant(net, "ab1")
    report = analyze(
        net,
        tuple(args.input_size),
        args.mode,
        args.faithful,
        args.double_macs,
        reference,
    )
    if args.format == "kv":
        print(render_kv(report))
    else:
        print(render_table(report, args.per_layer))
        print(summarize(report))
    return EXIT_OK


def degrade_image(
    hr_path: str, name: str, out_dir: str, scale: int, sr_dir: Optional[str]
) -> None:
    """Write the LR version of one HR image, and its bicubic upscale."""
    hr = modcrop(load_png(hr_path), scale)
    lr = bicubic_resize(
        hr, size=(hr.height // scale, hr.width // scale)
    )
    save_png(lr, osp.join(out_dir, name))
    if sr_dir is not None:
        up = bicubic_resize(lr, size=(hr.height, hr.width))
        save_png(up, osp.join(sr_dir, name))


def cmd_degrade(args: argparse.Namespace) -> int:
    """Bicubic degradation of a folder of HR PNGs."""
    names = list_files(args.hr_dir, ".png")
    if not names:
        raise UsageError("No PNG images found in {}".format(args.hr_dir))
    logger.info("Found %d images in %s", len(names), args.hr_dir)
    paths = [osp.join(args.hr_dir, name) for name in names]
    func = partial(
        degrade_image,
        out_dir=args.out_dir,
        scale=args.scale,
        sr_dir=args.sr_dir,
    )
    if args.nproc > 1:
        with Pool(args.nproc) as pool:
            pool.starmap(func, tqdm(zip(paths, names), total=len(names)))
    else:
        for path, name in tqdm(zip(paths, names), total=len(names)):
            func(path, name)
    return EXIT_OK


def train_overrides(args: argparse.Namespace) -> Dict[str, ConfigValue]:
    """Flag values on top of `--set` overrides."""
    overrides = parse_overrides(args.overrides)
    if args.seed is not None:
        overrides["train.seed"] = args.seed
    if args.steps is not None:
        overrides["train.steps"] = args.steps
    if args.strict:
        overrides["train.strict"] = True
    return overrides


def cmd_train(args: argparse.Namespace) -> int:
    """Train from scratch or continue a training checkpoint."""
    overrides = train_overrides(args)
    if args.resume is not None:
        model, ckpt, state = resume(args.resume)
        raw = toml.loads(config_to_text(ckpt.config))
        cfg: GranConfig = parse_config(raw, overrides)
        start_step = ckpt.step
    else:
        cfg = load_gran_config(args.config, overrides)
        model = build(cfg.net, cfg.train.seed)
        state = None
        start_step = 0
    dataset = PatchDataset.from_dir(
        args.data_dir,
        cfg.net.scale,
        args.manifest,
        patch_size=cfg.train.patch_size,
        batch_size=cfg.train.batch_size,
        seed=cfg.train.seed,
    )
    result = train_loop(
        model, dataset, cfg.train, args.out_dir, start_step, state
    )
    if result.smoothed:
        logger.info(
            "Finished at step %d, smoothed loss %.6f",
            result.step,
            result.smoothed[-1],
        )
    return EXIT_OK


def super_resolve(model: GRAN, image: Image) -> Image:
    """Run the model on one LR image."""
    out = model(Tensor(image.pixels, dtype=model.dtype))
    return from_nchw(out.data, image.name)


def input_files(inputs: Sequence[str]) -> List[str]:
    """PNG files given directly or found in the given folders."""
    files: List[str] = []
    for item in inputs:
        if osp.isdir(item):
            files.extend(list_files(item, ".png", with_prefix=True))
        else:
            files.append(item)
    return files


def cmd_infer(args: argparse.Namespace) -> int:
    """Write one SR PNG per LR input."""
    model, _ = load(args.checkpoint)
    if args.scale is not None and args.scale != model.scale:
        raise UsageError(
            "requested scale x{} but {} was trained for x{}".format(
                args.scale, args.checkpoint, model.scale
            )
        )
    files = input_files(args.inputs)
    if not files:
        raise UsageError("No PNG inputs in {}".format(" ".join(args.inputs)))
    for path in tqdm(files):
        sr = super_resolve(model, load_png(path))
        save_png(sr, osp.join(args.out_dir, osp.basename(path)))
    logger.info("Wrote %d images to %s", len(files), args.out_dir)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Print the metrics table and optionally write a CSV."""
    result = eval_dataset(
        args.sr_dir, args.hr_dir, args.scale, args.crop, args.nproc
    )
    print(render_result(result))
    if args.csv is not None:
        write_csv(result, args.csv)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    """Run the finite-difference suite; nonzero exit on any failure."""
    rows = run_gradcheck(args.size, range(args.seeds))
    print(render_rows(rows))
    worst = max(row.error for row in rows)
    print("max rel. error {:.3e}".format(worst))
    return EXIT_OK if all(row.passed for row in rows) else EXIT_FAILURE


COMMANDS = {
    "analyze": cmd_analyze,
    "degrade": cmd_degrade,
    "train": cmd_train,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command and map errors to exit codes."""
    args = parse_arguments(argv)
    if args.log_level is not None:
        set_level(args.log_level)
    try:
        return COMMANDS[args.cmd](args)
    except (ConfigError, UsageError) as err:
        logger.error("%s", err)
        return EXIT_USAGE
    except (ArithmeticError, CheckpointError, OSError, ValueError) as err:
        logger.error("%s: %s", type(err).__name__, err)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
