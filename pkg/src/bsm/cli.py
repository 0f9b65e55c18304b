"""
Command-line interface: ``bsm {match,eval,sweep,radiometric,bench}``.

Configuration precedence is flag > ``--config`` file > built-in default.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import warnings

from .config import BsmConfig
from .descriptor import SamplingPattern

_CONFIG_FLAGS = {
    "n": int,
    "window": int,
    "spread": float,
    "seed": int,
    "d_max": int,
    "lambda_c": float,
    "lambda_e": float,
    "lr_tolerance": float,
    "vote_radius": int,
    "gt_scale": float,
    "out_scale": float,
    "threads": int,
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--config", help="JSON config file")
    for name, typ in _CONFIG_FLAGS.items():
        flags = ["--" + name.replace("_", "-")]
        if "_" in name:
            flags.append("--" + name)
        g.add_argument(*flags, dest=name, type=typ, default=None)
    g.add_argument("-S", dest="window", type=int, default=None, help="alias of --window")


def effective_config(args) -> BsmConfig:
    base = BsmConfig.load(args.config) if getattr(args, "config", None) else BsmConfig()
    overrides = {k: getattr(args, k) for k in _CONFIG_FLAGS if getattr(args, k, None) is not None}
    return dataclasses.replace(base, **overrides)


def _sidecar(path) -> str:
    return path + ".config.json"


def _stage_path(out, tag) -> str:
    stem, ext = os.path.splitext(out)
    return f"{stem}_{tag}{ext or '.pgm'}"


# ---------------------------------------------------------------------------
# commands


def cmd_match(args) -> int:
    from .imageio import load_image, save_disparity
    from .pipeline import pattern_for, run_bsm

    config = effective_config(args)
    config.require_d_max()
    left = load_image(args.left)
    right = load_image(args.right)
    if args.pattern:
        pattern = SamplingPattern.load(args.pattern)
        if pattern.n != config.n:
            raise ValueError(f"pattern file has n={pattern.n}, config has n={config.n}")
    else:
        pattern = pattern_for(config)
    result = run_bsm(left, right, config, pattern, stages=args.stages)
    save_disparity(result.refined, args.out, config.out_scale)
    config.save(_sidecar(args.out))
    if args.save_pattern:
        pattern.save(args.save_pattern)
    if args.stages:
        for tag, dmap in (("stage1_unmasked", result.unmasked), ("stage2_masked", result.wta_left),
                          ("stage3_refined", result.refined)):
            save_disparity(dmap, _stage_path(args.out, tag), config.out_scale)
    return 0


def cmd_eval(args) -> int:
    from .datasets import REGIONS, region_from_mask
    from .evaluate import format_reports, scene_reports, write_reports_csv
    from .imageio import load_gt_disparity, load_mask

    config = effective_config(args)
    gt = load_gt_disparity(args.gt, config.gt_scale or 1.0)
    result = load_gt_disparity(args.result, args.result_scale or config.out_scale)
    regions = {}
    masks = args.masks or []
    if len(masks) > len(REGIONS):
        raise ValueError(f"at most {len(REGIONS)} masks (nonocc all disc)")
    for name, path in zip(REGIONS, masks):
        regions[name] = region_from_mask(name, load_mask(path))
    reports = scene_reports(result, gt, regions, args.threshold, args.scene or "")
    print(format_reports(reports))
    if args.csv:
        write_reports_csv(args.csv, reports)
    return 0


def _load_scenes(args, config):
    from .datasets import find_scene
    from .evaluate import LoadedScene

    scenes = []
    for d in args.scene:
        scene = find_scene(d, d_max=config.d_max, gt_scale=config.gt_scale)
        if scene.d_max is None:
            raise ValueError(f"{d}: d_max unknown; pass --d-max or add scene.json")
        left, right, gt, regions = scene.load()
        scenes.append(LoadedScene(scene.name, left, right, gt, regions, scene.d_max))
    return scenes


def cmd_sweep(args) -> int:
    from .evaluate import length_sweep, write_sweep_csv

    config = effective_config(args)
    scenes = _load_scenes(args, config)
    points = length_sweep(scenes, args.n_values, config, args.threshold)
    for p in points:
        print(f"n={p.n:<6d} avg_error={p.avg_error:.2f}% wall_time={p.wall_time:.3f}s")
    if args.csv:
        write_sweep_csv(args.csv, points)
        config.save(_sidecar(args.csv))
    return 0


def cmd_radiometric(args) -> int:
    from .datasets import find_illumination_set, region_from_mask
    from .evaluate import radiometric_protocol
    from .imageio import load_image, load_mask

    config = effective_config(args)
    iset = find_illumination_set(args.root, args.mode, args.fixed, config.d_max, config.gt_scale)
    config = config.replace(d_max=config.d_max or iset.d_max)
    config.require_d_max()
    lefts = [load_image(p) for p in iset.lefts]
    rights = [load_image(p) for p in iset.rights]
    gt = iset.load_gt()
    region_mask = None
    if args.region in iset.masks:
        region_mask = region_from_mask(args.region, load_mask(iset.masks[args.region]))
    matrix = radiometric_protocol(lefts, rights, gt, config, region_mask, args.region, args.threshold)
    for i, row in enumerate(matrix.rates):
        print(f"left {i}: " + "  ".join(f"{v:6.2f}" for v in row))
    print(f"diagonal mean {matrix.diagonal_mean():.2f}  off-diagonal mean {matrix.off_diagonal_mean():.2f}")
    if args.csv:
        matrix.to_csv(args.csv)
        config.save(_sidecar(args.csv))
    return 0


def cmd_bench(args) -> int:
    from .evaluate import time_pipeline
    from .imageio import load_image

    config = effective_config(args)
    if args.scene:
        scene = _load_scenes(argparse.Namespace(scene=[args.scene]), config)[0]
        left, right = scene.left, scene.right
        config = config.replace(d_max=scene.d_max)
    elif args.left and args.right:
        left, right = load_image(args.left), load_image(args.right)
    else:
        raise ValueError("bench needs --scene or --left/--right")
    config.require_d_max()
    seconds = time_pipeline(left, right, config, args.repetitions)
    h, w = left.shape[:2]
    print(f"size={w}x{h} d_max={config.d_max} n={config.n} repetitions={args.repetitions} "
          f"median_seconds={seconds:.3f}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsm", description="Binary stereo matching")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="compute a left-reference disparity map")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("out", help="output disparity (.pgm 16-bit, or .pfm)")
    p.add_argument("--stages", action="store_true", help="also write unmasked / masked / refined maps")
    p.add_argument("--pattern", help="load the sampling pattern from this file")
    p.add_argument("--save-pattern", help="write the sampling pattern to this file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="score a disparity map against ground truth")
    p.add_argument("result")
    p.add_argument("gt")
    p.add_argument("--masks", nargs="+", help="region masks in the order nonocc all disc")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--result-scale", type=float, default=None,
                   help="scale of the result file (default: out_scale)")
    p.add_argument("--scene", default="", help="label for the report rows")
    p.add_argument("--csv")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="descriptor-length quality/speed sweep")
    p.add_argument("--scene", nargs="+", required=True, help="scene directories")
    p.add_argument("--n-values", nargs="+", type=int, default=[512, 1024, 2048, 4096])
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--csv")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("radiometric", help="3x3 exposure / lighting protocol")
    p.add_argument("root", help="Middlebury 2005/2006 scene directory")
    p.add_argument("--mode", choices=["exposure", "lighting"], default="exposure")
    p.add_argument("--fixed", type=int, default=None,
                   help="index of the condition held fixed (Illum for exposure, Exp for lighting)")
    p.add_argument("--region", choices=["nonocc", "all", "disc"], default="nonocc")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--csv")
    _add_config_flags(p)
    p.set_defaults(func=cmd_radiometric)

    p = sub.add_parser("bench", help="time the full pipeline")
    p.add_argument("--scene")
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--repetitions", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings.filterwarnings("ignore", module="numba")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        kind = type(exc).__name__
        print(f"bsm {args.command}: error: {kind}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
