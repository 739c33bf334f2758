"""Score tables: deltas, verdicts, CSV and Markdown rendering."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..iqa import MetricScore, zscore

IMPROVED = "improved"
REGRESSED = "regressed"
TIED = "tied"
BASELINE = "baseline"

_LABELS = {"psnr": "PSNR", "ssim": "SSIM", "nrq": "NRQ"}


class ReportError(ValueError):
    pass


@dataclass
class Report:
    """Complete metric x scene x variant grid. The first variant is the baseline."""

    metrics: tuple[str, ...]
    scenes: tuple[str, ...]
    variants: tuple[str, ...]
    cells: list[MetricScore]
    deltas: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    tie_epsilon: float = 0.0
    provenance: dict = field(default_factory=dict)

    def cell(self, metric: str, scene: str, variant: str) -> MetricScore:
        return self._index()[(metric, scene, variant)]

    def _index(self):
        return {(c.metric_id, c.scene_id, c.variant_id): c for c in self.cells}

    @property
    def normalized(self) -> bool:
        return any(c.normalized is not None for c in self.cells)


@dataclass(frozen=True)
class VerdictGrid:
    verdicts: dict            # (metric, scene, variant) -> verdict
    improved_counts: dict     # metric -> number of improved (scene, variant) cells

    def stable(self, metric: str, n_scenes: int, n_compared: int = 1) -> bool:
        """True when every comparison for `metric` improved."""
        return self.improved_counts.get(metric, 0) == n_scenes * n_compared


def classify(delta: float, tie_epsilon: float = 0.0) -> str:
    if math.isnan(delta):
        return TIED
    if delta > tie_epsilon:
        return IMPROVED
    if delta < -tie_epsilon:
        return REGRESSED
    return TIED


def _delta(new: float, old: float) -> float:
    if math.isinf(new) and math.isinf(old) and (new > 0) == (old > 0):
        return 0.0  # e.g. two pixel-identical renders, both psnr = inf
    return new - old


def _check_complete(report: Report) -> None:
    index = report._index()
    for m in report.metrics:
        for s in report.scenes:
            for v in report.variants:
                if (m, s, v) not in index:
                    raise ReportError(f"report grid is missing cell ({m}, {s}, {v})")
    expected = len(report.metrics) * len(report.scenes) * len(report.variants)
    if len(report.cells) != expected:
        raise ReportError(f"report has {len(report.cells)} cells, expected {expected}")


def rank_verdict(report: Report, tie_epsilon: float = 0.0) -> VerdictGrid:
    """Classify every non-baseline cell against the baseline variant."""
    _check_complete(report)
    index = report._index()
    baseline = report.variants[0]
    verdicts = {}
    counts = {}
    for m in report.metrics:
        counts[m] = 0
        for s in report.scenes:
            base = index[(m, s, baseline)].raw
            for v in report.variants[1:]:
                verdict = classify(_delta(index[(m, s, v)].raw, base), tie_epsilon)
                verdicts[(m, s, v)] = verdict
                counts[m] += verdict == IMPROVED
    return VerdictGrid(verdicts, counts)


def assemble(metrics: Sequence[str], scenes: Sequence[str], variants: Sequence[str],
             cells: Sequence[MetricScore], normalize: bool = False, tie_epsilon: float = 0.0,
             provenance: Optional[dict] = None) -> Report:
    """Build a Report from raw cells: normalize per metric, then compute deltas and verdicts."""
    report = Report(tuple(metrics), tuple(scenes), tuple(variants),
                    [MetricScore(c.metric_id, c.scene_id, c.variant_id, c.raw, c.normalized)
                     for c in cells],
                    tie_epsilon=tie_epsilon, provenance=dict(provenance or {}))
    _check_complete(report)
    if normalize:
        for m in report.metrics:
            row = [c for c in report.cells if c.metric_id == m]
            raws = [c.raw for c in row]
            if not all(math.isfinite(r) for r in raws):
                # a population containing inf has no meaningful mean/std
                report.provenance.setdefault("warnings", []).append(
                    f"{m}: non-finite raw score, normalization skipped")
                continue
            for c, z in zip(row, zscore(raws)):
                c.normalized = z
    index = report._index()
    baseline = report.variants[0]
    for m in report.metrics:
        for s in report.scenes:
            base = index[(m, s, baseline)].raw
            for v in report.variants[1:]:
                report.deltas[(m, s, v)] = _delta(index[(m, s, v)].raw, base)
    report.verdicts = rank_verdict(report, tie_epsilon).verdicts
    return report


# ---------------------------------------------------------------------------
# rendering

def fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    text = f"{value:.4f}"
    return "0.0000" if text == "-0.0000" else text


def _sorted_cells(report: Report):
    return sorted(report.cells, key=lambda c: (c.metric_id, c.scene_id, c.variant_id))


def emit_csv(report: Report) -> str:
    _check_complete(report)
    lines = ["metric,scene,variant,raw,normalized,verdict"]
    for c in _sorted_cells(report):
        verdict = report.verdicts.get((c.metric_id, c.scene_id, c.variant_id), BASELINE)
        lines.append(",".join([c.metric_id, c.scene_id, c.variant_id, fmt(c.raw),
                               fmt(c.normalized), verdict]))
    return "\n".join(lines) + "\n"


def metric_label(metric_id: str) -> str:
    return _LABELS.get(metric_id, metric_id)


def _row(cells: Sequence[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def _wide_table(report: Report, value) -> list[str]:
    scenes = list(report.scenes)
    header = ["Algorithm"]
    for v in report.variants:
        header += [f"{v.capitalize()} Rendering"] + [""] * (len(scenes) - 1)
    lines = [_row(header), _row(["---"] * len(header)),
             _row([""] + scenes * len(report.variants))]
    for m in report.metrics:
        row = [metric_label(m)]
        for v in report.variants:
            row += [fmt(value(report.cell(m, s, v))) for s in scenes]
        lines.append(_row(row))
    return lines


def _verdict_table(report: Report) -> list[str]:
    lines = []
    for v in report.variants[1:]:
        header = ["Algorithm"] + [f"{s}" for s in report.scenes]
        lines.append(f"Verdicts, {v} vs {report.variants[0]}:")
        lines.append("")
        lines += [_row(header), _row(["---"] * len(header))]
        for m in report.metrics:
            lines.append(_row([metric_label(m)] + [report.verdicts[(m, s, v)] for s in report.scenes]))
        lines.append("")
    return lines


def _long_table(report: Report) -> list[str]:
    lines = [_row(["Algorithm", "Scene", "Variant", "Raw", "Normalized", "Verdict"]),
             _row(["---"] * 6)]
    for m in report.metrics:
        for s in report.scenes:
            for v in report.variants:
                c = report.cell(m, s, v)
                lines.append(_row([metric_label(m), s, v, fmt(c.raw), fmt(c.normalized),
                                   report.verdicts.get((m, s, v), BASELINE)]))
    return lines


def emit_markdown(report: Report) -> str:
    """Markdown pipe tables: metrics as rows, one column group per variant.

    With more than two variants the grouped layout gets unwieldy, so the
    output falls back to one row per cell.
    """
    _check_complete(report)
    lines = ["# IQA results", ""]
    if len(report.variants) > 2:
        lines += _long_table(report) + [""]
    else:
        lines += ["Raw scores:", ""] + _wide_table(report, lambda c: c.raw) + [""]
        if report.normalized:
            lines += ["Normalized scores (z-score per metric):", ""]
            lines += _wide_table(report, lambda c: c.normalized) + [""]
        lines += _verdict_table(report)
    return "\n".join(lines).rstrip("\n") + "\n"
