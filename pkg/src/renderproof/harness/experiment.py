"""Run a comparison experiment: render every scene variant, score it, build the report."""
from __future__ import annotations

import json
import logging
import platform
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..iqa import FR_METRICS, MetricPreconditionError, MetricScore, NrCalibration, \
    default_calibration, score
from ..render import (DisplayImage, LinearImage, bake_lightmaps, encode_display, read_ppm, render,
                      write_pfm, write_ppm)
from ..scene import apply_overrides, load_overrides, load_scene
from .config import ExperimentConfig
from .report import Report, assemble, emit_csv, emit_markdown

log = logging.getLogger(__name__)


def _image_name(scene_id: str, variant_id: str) -> str:
    return f"{scene_id}__{variant_id}"


def run_experiment(config: ExperimentConfig, write_images: bool = True) -> Report:
    """Render, score and tabulate every (scene, variant) pair in `config`.

    Images go to ``<out_dir>/images`` when `write_images` is set. Any failure
    aborts the whole run; partial grids are never reported.
    """
    images_dir = Path(config.out_dir) / "images"
    if write_images:
        images_dir.mkdir(parents=True, exist_ok=True)
    calibration: Optional[NrCalibration] = None
    if "nrq" in config.metrics:
        if config.calibration_path is not None:
            calibration = NrCalibration.from_json(Path(config.calibration_path).read_text())
        else:
            calibration = default_calibration()
    needs_reference = any(m in FR_METRICS for m in config.metrics)

    overrides = {v.variant_id: load_overrides(v.overrides_path) if v.overrides_path else []
                 for v in config.variants}

    cells = []
    for entry in config.scenes:
        scene = load_scene(entry.scene_path)
        reference: Optional[DisplayImage] = None
        if needs_reference:
            if entry.reference_image is not None:
                reference = read_ppm(entry.reference_image)
            else:
                log.info("rendering reference for %s", entry.scene_id)
                ref_linear = render(scene, entry.reference_settings)
                reference = encode_display(ref_linear, entry.reference_settings.exposure)
                if write_images:
                    write_pfm(images_dir / f"{entry.scene_id}__reference.pfm", ref_linear)
            if write_images:
                write_ppm(images_dir / f"{entry.scene_id}__reference.ppm", reference)
            w, h = scene.camera.resolution
            if (reference.width, reference.height) != (w, h):
                raise MetricPreconditionError(
                    f"scene {entry.scene_id!r}: dimension mismatch, reference is "
                    f"{reference.width}x{reference.height}, renders are {w}x{h}")

        for variant in config.variants:
            log.info("rendering %s / %s", entry.scene_id, variant.variant_id)
            edited = apply_overrides(scene, overrides[variant.variant_id])
            lightmaps = bake_lightmaps(edited, variant.bake) if variant.settings.mode == "baked" else None
            linear: LinearImage = render(edited, variant.settings, lightmaps)
            display = encode_display(linear, variant.settings.exposure)
            if write_images:
                name = _image_name(entry.scene_id, variant.variant_id)
                write_pfm(images_dir / f"{name}.pfm", linear)
                write_ppm(images_dir / f"{name}.ppm", display)
            for metric in config.metrics:
                raw = score(metric, display, reference, calibration=calibration)
                cells.append(MetricScore(metric, entry.scene_id, variant.variant_id, raw))

    return assemble(
        metrics=config.metrics,
        scenes=[s.scene_id for s in config.scenes],
        variants=[v.variant_id for v in config.variants],
        cells=cells,
        normalize=config.normalize,
        tie_epsilon=config.tie_epsilon,
        provenance=provenance(config),
    )


def provenance(config: ExperimentConfig) -> dict:
    import numba

    return {
        "tool": f"renderproof {__version__}",
        "config": config.source,
        "seeds": {
            "references": {s.scene_id: s.reference_settings.seed
                           for s in config.scenes if s.reference_settings is not None},
            "variants": {v.variant_id: v.settings.seed for v in config.variants},
            "bake": {v.variant_id: v.bake.seed for v in config.variants if v.bake is not None},
        },
        "render_settings": {v.variant_id: asdict(v.settings) for v in config.variants},
        "libraries": {"numpy": np.__version__, "numba": numba.__version__,
                      "python": platform.python_version()},
    }


def write_report(report: Report, out_dir, figures: bool = True) -> list[Path]:
    """Write report.csv, report.md, manifest.json and (optionally) figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (("report.csv", emit_csv(report)), ("report.md", emit_markdown(report))):
        (out / name).write_text(text, encoding="utf-8")
        written.append(out / name)
    manifest = dict(report.provenance)
    manifest["tie_epsilon"] = report.tie_epsilon
    manifest["cells"] = [c.to_dict() for c in sorted(
        report.cells, key=lambda c: (c.metric_id, c.scene_id, c.variant_id))]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    written.append(out / "manifest.json")
    if figures:
        from .figures import plot_scores, plot_variants

        written.append(plot_scores(report, out / "figures" / "scores.png"))
        images_dir = out / "images"
        if images_dir.is_dir():
            for scene_id in report.scenes:
                path = plot_variants(scene_id, report.variants, images_dir,
                                     out / "figures" / f"{scene_id}__variants.png")
                if path is not None:
                    written.append(path)
    return written
