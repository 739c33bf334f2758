"""renderproof command line: render, bake, assess, compare.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 metric precondition failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, apply_thread_limit
from .iqa import FR_METRICS, METRICS, MetricPreconditionError, NrCalibration, score

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_METRIC = 3


class UsageError(Exception):
    def __init__(self, message, usage=""):
        super().__init__(message)
        self.usage = usage


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; we want code 1 and no SystemExit
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}", self.format_usage())


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text!r}")
    return value


def _finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _metric_list(text: str) -> tuple[str, ...]:
    ids = tuple(m.strip() for m in text.split(",") if m.strip())
    if not ids:
        raise argparse.ArgumentTypeError("expected at least one metric")
    for m in ids:
        if m not in METRICS:
            raise argparse.ArgumentTypeError(
                f"unknown metric {m!r} (expected one of {', '.join(METRICS)})")
    return ids


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="renderproof", allow_abbrev=False,
                     description="Render static scenes and score them with image quality metrics.")
    parser.add_argument("--version", action="version", version=f"renderproof {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("render", allow_abbrev=False, help="render a scene to PPM (and optionally PFM)")
    p.add_argument("--scene", required=True, type=Path)
    p.add_argument("--mode", required=True, choices=("direct", "gi", "baked"))
    p.add_argument("--spp", required=True, type=_positive_int)
    p.add_argument("--bounces", required=True, type=_nonneg_int)
    p.add_argument("--seed", required=True, type=_nonneg_int)
    p.add_argument("--exposure", type=_finite_float, default=1.0)
    p.add_argument("--lightmaps", type=Path,
                   help="baked lightmaps (LMP1); baked mode bakes with defaults when omitted")
    p.add_argument("--out-ppm", required=True, type=Path)
    p.add_argument("--out-pfm", type=Path)

    p = sub.add_parser("bake", allow_abbrev=False, help="bake diffuse irradiance lightmaps")
    p.add_argument("--scene", required=True, type=Path)
    p.add_argument("--texel-size", required=True, type=_finite_float)
    p.add_argument("--samples", required=True, type=_positive_int)
    p.add_argument("--bounces", required=True, type=_nonneg_int)
    p.add_argument("--seed", required=True, type=_nonneg_int)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("assess", allow_abbrev=False, help="score a test image against a reference")
    p.add_argument("--ref", type=Path, help="reference PPM (needed by psnr and ssim)")
    p.add_argument("--test", required=True, type=Path)
    p.add_argument("--metrics", required=True, type=_metric_list)
    p.add_argument("--calibration", type=Path, help="NR calibration JSON (default: bundled)")

    p = sub.add_parser("compare", allow_abbrev=False, help="run an experiment config and write reports")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--tie-epsilon", type=_finite_float)
    p.add_argument("--out-dir", type=Path, help="overrides the config's out_dir")
    p.add_argument("--no-figures", action="store_true", help="skip the matplotlib figures")
    return parser


# ---------------------------------------------------------------------------
# subcommands

def _read_scene(path: Path):
    from .scene import SceneError, load_scene

    try:
        return load_scene(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except SceneError as exc:
        raise InputError(f"{path}: {exc}") from None


def _read_ppm(path: Path, flag: str):
    from .render import ImageFormatError, read_ppm

    try:
        return read_ppm(path)
    except OSError as exc:
        raise InputError(f"{flag} {path}: {exc.strerror or exc}") from None
    except ImageFormatError as exc:
        raise InputError(f"{flag} {path}: {exc}") from None


def _cmd_render(args, out, err) -> int:
    from .render import (BakeSettings, InvalidSceneError, LightmapError, RenderSettings,
                         bake_lightmaps, encode_display, read_lightmaps, render, write_pfm, write_ppm)

    scene = _read_scene(args.scene)
    try:
        settings = RenderSettings(mode=args.mode, samples_per_pixel=args.spp,
                                  max_bounces=args.bounces, seed=args.seed, exposure=args.exposure)
    except ValueError as exc:
        raise UsageError(f"render: {exc}") from None
    lightmaps = None
    if args.mode == "baked":
        try:
            if args.lightmaps is not None:
                lightmaps = read_lightmaps(args.lightmaps)
            else:
                print("renderproof: no --lightmaps given, baking with default settings", file=err)
                lightmaps = bake_lightmaps(scene, BakeSettings())
        except OSError as exc:
            raise InputError(f"--lightmaps {args.lightmaps}: {exc.strerror or exc}") from None
        except InvalidSceneError as exc:
            raise InputError(f"{args.scene}: {exc}") from None
        except LightmapError as exc:
            raise InputError(f"--lightmaps {args.lightmaps or '(baked)'}: {exc}") from None
    elif args.lightmaps is not None:
        raise UsageError("render: --lightmaps only applies to --mode baked")
    try:
        image = render(scene, settings, lightmaps)
    except InvalidSceneError as exc:
        raise InputError(f"{args.scene}: {exc}") from None
    except LightmapError as exc:
        raise InputError(f"--lightmaps {args.lightmaps}: {exc}") from None
    write_ppm(args.out_ppm, encode_display(image, settings.exposure))
    if args.out_pfm is not None:
        write_pfm(args.out_pfm, image)
    print(json.dumps({"ppm": str(args.out_ppm), "pfm": str(args.out_pfm) if args.out_pfm else None,
                      "mean_radiance": round(image.mean(), 6)}), file=out)
    return EXIT_OK


def _cmd_bake(args, out, err) -> int:
    from .render import BakeSettings, InvalidSceneError, LightmapError, bake_lightmaps, write_lightmaps

    scene = _read_scene(args.scene)
    try:
        settings = BakeSettings(texel_size=args.texel_size, samples_per_texel=args.samples,
                                max_bounces=args.bounces, seed=args.seed)
    except ValueError as exc:
        raise UsageError(f"bake: {exc}") from None
    try:
        lightmaps = bake_lightmaps(scene, settings)
    except (InvalidSceneError, LightmapError) as exc:
        raise InputError(f"{args.scene}: {exc}") from None
    write_lightmaps(args.out, lightmaps)
    texels = sum(int(e.used.sum()) for e in lightmaps.entries)
    print(json.dumps({"lightmaps": str(args.out), "maps": len(lightmaps.entries),
                      "texels": texels}), file=out)
    return EXIT_OK


def _format_value(value: float) -> str:
    if math.isinf(value):
        return json.dumps("inf" if value > 0 else "-inf")
    return f"{value:.4f}"


def _cmd_assess(args, out, err) -> int:
    needs_ref = any(m in FR_METRICS for m in args.metrics)
    if needs_ref and args.ref is None:
        raise UsageError("assess: --ref is required for psnr and ssim")
    test = _read_ppm(args.test, "--test")
    ref = _read_ppm(args.ref, "--ref") if args.ref is not None else None
    calibration: Optional[NrCalibration] = None
    if args.calibration is not None:
        try:
            calibration = NrCalibration.from_json(args.calibration.read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"--calibration {args.calibration}: {exc.strerror or exc}") from None
        except ValueError as exc:
            raise InputError(f"--calibration {args.calibration}: {exc}") from None
    lines = []
    for m in args.metrics:
        try:
            value = score(m, test, ref if m in FR_METRICS else None, calibration=calibration)
        except MetricPreconditionError as exc:
            raise MetricPreconditionError(f"{m} ({args.ref} vs {args.test}): {exc}") from None
        lines.append('{"metric": %s, "value": %s}' % (json.dumps(m), _format_value(value)))
    # print only after every metric succeeded
    for line in lines:
        print(line, file=out)
    return EXIT_OK


def _cmd_compare(args, out, err) -> int:
    import dataclasses

    from .harness import ConfigError, load_config, run_experiment, write_report
    from .render import ImageFormatError, InvalidSceneError, LightmapError
    from .scene import SceneError

    try:
        config = load_config(args.config)
    except OSError as exc:
        raise InputError(f"--config {args.config}: {exc.strerror or exc}") from None
    except ConfigError as exc:
        raise InputError(f"--config {args.config}: {exc}") from None
    changes = {}
    if args.tie_epsilon is not None:
        if args.tie_epsilon < 0:
            raise UsageError("compare: --tie-epsilon must be >= 0")
        changes["tie_epsilon"] = args.tie_epsilon
    if args.out_dir is not None:
        changes["out_dir"] = args.out_dir
    if changes:
        config = dataclasses.replace(config, **changes)
    try:
        report = run_experiment(config)
    except OSError as exc:
        raise InputError(f"{exc.filename or args.config}: {exc.strerror or exc}") from None
    except (SceneError, ImageFormatError, LightmapError, InvalidSceneError, ConfigError) as exc:
        raise InputError(f"--config {args.config}: {exc}") from None
    written = write_report(report, config.out_dir, figures=not args.no_figures)
    for m in report.metrics:
        improved = sum(1 for (mm, _, _), v in report.verdicts.items() if mm == m and v == "improved")
        total = sum(1 for (mm, _, _) in report.verdicts if mm == m)
        print(f"{m}: improved {improved}/{total}", file=out)
    for path in written:
        print(f"wrote {path}", file=out)
    return EXIT_OK


_COMMANDS = {"render": _cmd_render, "bake": _cmd_bake, "assess": _cmd_assess,
             "compare": _cmd_compare}


def dispatch(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    """Run one command line; returns the exit status instead of exiting."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        print((exc.usage or parser.format_usage()).rstrip(), file=err)
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        apply_thread_limit()
    except ValueError as exc:
        print(f"renderproof: error: RENDERPROOF_THREADS: {exc}", file=err)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        print(f"renderproof: error: {exc}", file=err)
        return EXIT_USAGE
    except InputError as exc:
        print(f"renderproof: error: {exc}", file=err)
        return EXIT_INPUT
    except MetricPreconditionError as exc:
        print(f"renderproof: error: {exc}", file=err)
        return EXIT_METRIC


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
