import csv
import io
import json
import math
import shutil

import numpy as np
import pytest

from renderproof.harness import (BASELINE, IMPROVED, REGRESSED, TIED, ConfigError, Report, ReportError,
                                 assemble, classify, emit_csv, emit_markdown, load_config, parse_config,
                                 rank_verdict, run_experiment, write_report)
from renderproof.iqa import MetricScore
from renderproof.scene import closed_box, dump_scene

from conftest import DATA, GOLDEN
from published import PUBLISHED, SCENE_IDS, published_report


# -- verdicts ----------------------------------------------------------------

def test_classify_boundaries():
    assert classify(0.1410) == IMPROVED
    assert classify(-0.01) == REGRESSED
    assert classify(0.0) == TIED
    assert classify(0.2, 0.3) == TIED
    assert classify(0.3, 0.3) == TIED
    assert classify(math.nan) == TIED


def test_published_deltas_all_improve():
    report = published_report()
    assert report.deltas[("CVRKD", "Scene1", "improved")] == pytest.approx(0.1410, abs=1e-12)
    assert report.deltas[("CVRKD", "Scene2", "improved")] == pytest.approx(0.5891, abs=1e-12)
    assert report.deltas[("CVRKD", "Scene3", "improved")] == pytest.approx(0.2363, abs=1e-12)
    grid = rank_verdict(report, 0.0)
    assert set(grid.verdicts.values()) == {IMPROVED}
    assert grid.improved_counts == {m: 3 for m in PUBLISHED}
    assert all(grid.stable(m, 3) for m in PUBLISHED)


def test_tie_epsilon_threshold():
    grid = rank_verdict(published_report(), 0.3)
    row = [grid.verdicts[("CVRKD", s, "improved")] for s in SCENE_IDS]
    assert row == [TIED, IMPROVED, TIED]
    assert not grid.stable("CVRKD", 3)


def test_verdicts_match_recomputed_deltas():
    report = published_report(tie_epsilon=0.05)
    for key, verdict in report.verdicts.items():
        assert verdict == classify(report.deltas[key], 0.05)


def test_incomplete_grid_is_rejected():
    cells = [MetricScore("psnr", "a", "original", 1.0)]
    with pytest.raises(ReportError, match="missing"):
        assemble(("psnr",), ("a",), ("original", "improved"), cells)


def test_inf_handling():
    cells = [MetricScore("psnr", "a", "original", math.inf), MetricScore("psnr", "a", "improved", math.inf),
             MetricScore("psnr", "b", "original", 20.0), MetricScore("psnr", "b", "improved", math.inf)]
    report = assemble(("psnr",), ("a", "b"), ("original", "improved"), cells, normalize=True)
    assert report.verdicts[("psnr", "a", "improved")] == TIED
    assert report.verdicts[("psnr", "b", "improved")] == IMPROVED
    assert all(c.normalized is None for c in report.cells)
    assert "normalization skipped" in report.provenance["warnings"][0]
    assert "inf" in emit_csv(report)


# -- normalization -------------------------------------------------------------

def test_row_normalization():
    report = published_report(normalize=True)
    for metric in PUBLISHED:
        z = [c.normalized for c in report.cells if c.metric_id == metric]
        raw = [c.raw for c in report.cells if c.metric_id == metric]
        assert abs(np.mean(z)) < 1e-9
        assert abs(np.std(z) - 1) < 1e-9
        assert np.array_equal(np.argsort(z), np.argsort(raw))
    # verdicts depend on raw deltas only
    assert report.verdicts == published_report().verdicts


# -- CSV -----------------------------------------------------------------------

def test_csv_layout():
    text = emit_csv(published_report())
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["metric", "scene", "variant", "raw", "normalized", "verdict"]
    assert len(rows) == 1 + 18
    keys = [tuple(r[:3]) for r in rows[1:]]
    assert keys == sorted(keys)
    assert all(r[4] == "" for r in rows[1:])
    assert ["NIMA", "Scene1", "original", "0.4080", "", BASELINE] in rows
    assert ["NIMA", "Scene1", "improved", "0.4673", "", IMPROVED] in rows
    assert all(len(r[3].split(".")[1]) == 4 for r in rows[1:])


def test_csv_deterministic():
    report = published_report(normalize=True)
    assert emit_csv(report) == emit_csv(report)
    assert emit_csv(report) == emit_csv(published_report(normalize=True))


# -- Markdown ------------------------------------------------------------------

def test_markdown_reproduces_published_table():
    text = emit_markdown(published_report())
    assert text == (GOLDEN / "published_iqa_table.md").read_text()
    assert "CVRKD | -1.1654 | 0.9932 | -0.3112 | -1.0244 | 1.5823 | -0.0749" in text
    for values in PUBLISHED.values():
        for v in values:
            assert f"{v:.4f}" in text


def test_markdown_single_cell():
    cells = [MetricScore("ssim", "s", "original", 0.5), MetricScore("ssim", "s", "improved", 0.6)]
    text = emit_markdown(assemble(("ssim",), ("s",), ("original", "improved"), cells))
    table = text.split("Raw scores:")[1].split("Verdicts")[0]
    data_rows = [ln for ln in table.splitlines() if ln.startswith("| SSIM")]
    assert data_rows == ["| SSIM | 0.5000 | 0.6000 |"]


def test_markdown_long_format_for_three_variants():
    cells = [MetricScore("psnr", "s", v, x) for v, x in (("a", 1.0), ("b", 2.0), ("c", 0.5))]
    text = emit_markdown(assemble(("psnr",), ("s",), ("a", "b", "c"), cells))
    assert "| Algorithm | Scene | Variant | Raw | Normalized | Verdict |" in text
    assert "| PSNR | s | b | 2.0000 |  | improved |" in text
    assert "| PSNR | s | c | 0.5000 |  | regressed |" in text


def test_markdown_deterministic():
    assert emit_markdown(published_report(True)) == emit_markdown(published_report(True))


# -- config --------------------------------------------------------------------

def _config(**changes):
    doc = {
        "scenes": [{"id": "box", "scene": "box.json",
                    "reference": {"render": {"mode": "gi", "spp": 16, "bounces": 8, "seed": 3}}}],
        "variants": [
            {"id": "original", "overrides": "dull.json", "render": {"mode": "direct", "spp": 4, "bounces": 1}},
            {"id": "improved", "render": {"mode": "gi", "spp": 4, "bounces": 4}},
        ],
        "metrics": ["psnr", "ssim"],
    }
    doc.update(changes)
    return doc


def test_config_parse_and_paths(tmp_path):
    cfg = parse_config(json.dumps(_config()), tmp_path)
    assert cfg.scenes[0].scene_path == tmp_path / "box.json"
    assert cfg.variants[0].overrides_path == tmp_path / "dull.json"
    assert cfg.variants[1].settings.max_bounces == 4
    assert cfg.normalize is True and cfg.tie_epsilon == 0.0


@pytest.mark.parametrize("changes, message", [
    (dict(extra=1), "unknown key"),
    (dict(metrics=["psnr", "lpips"]), "unknown metric"),
    (dict(metrics=[]), "at least one metric"),
    (dict(scenes=[]), "at least one scene"),
    (dict(tie_epsilon=-1), "tie_epsilon"),
    (dict(normalize="yes"), "normalize"),
])
def test_config_errors(tmp_path, changes, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(json.dumps(_config(**changes)), tmp_path)


def test_config_variant_errors(tmp_path):
    doc = _config()
    doc["variants"] = doc["variants"][:1]
    with pytest.raises(ConfigError, match="two variants"):
        parse_config(json.dumps(doc), tmp_path)
    doc = _config()
    doc["variants"][1]["id"] = "original"
    with pytest.raises(ConfigError, match="duplicate variant"):
        parse_config(json.dumps(doc), tmp_path)
    doc = _config()
    doc["variants"][1]["render"]["spp"] = 0
    with pytest.raises(ConfigError, match="variants\\[1\\].render"):
        parse_config(json.dumps(doc), tmp_path)
    doc = _config()
    del doc["scenes"][0]["reference"]
    with pytest.raises(ConfigError, match="reference"):
        parse_config(json.dumps(doc), tmp_path)
    with pytest.raises(ConfigError, match="syntax error"):
        parse_config("{", tmp_path)


def test_bundled_config_loads():
    cfg = load_config(DATA / "experiment.json")
    assert [s.scene_id for s in cfg.scenes] == ["garage_bay", "garage_aisle", "open_lot"]
    original, improved = cfg.variants
    assert original.settings.mode == "direct" and improved.settings.mode == "gi"
    for s in cfg.scenes:
        ref = s.reference_settings
        assert ref.mode == "gi"
        assert ref.samples_per_pixel == 4 * improved.settings.samples_per_pixel
        assert ref.max_bounces == 2 * improved.settings.max_bounces


# -- end to end on a small box ----------------------------------------------------

@pytest.fixture
def box_experiment(tmp_path):
    (tmp_path / "box.json").write_text(dump_scene(closed_box(resolution=(24, 24))))
    (tmp_path / "dull.json").write_text('[{"target": "wall", "albedo": [0.3, 0.3, 0.3]}]')
    (tmp_path / "exp.json").write_text(json.dumps(_config(out_dir=str(tmp_path / "out"))))
    return tmp_path


def test_run_experiment_grid(box_experiment):
    cfg = load_config(box_experiment / "exp.json")
    report = run_experiment(cfg)
    # 2 metrics x 2 variants, one verdict per metric against the baseline
    assert len(report.cells) == 4
    assert len(report.verdicts) == 2
    # dull walls in direct mode sit far below the 0.4 reference; SSIM on a
    # flat box is dominated by noise, so only PSNR has a reliable direction
    assert report.cell("psnr", "box", "improved").raw > report.cell("psnr", "box", "original").raw
    assert report.verdicts[("psnr", "box", "improved")] == IMPROVED
    images = sorted(p.name for p in (box_experiment / "out" / "images").iterdir())
    assert images == ["box__improved.pfm", "box__improved.ppm", "box__original.pfm", "box__original.ppm",
                      "box__reference.pfm", "box__reference.ppm"]


def test_identical_variants_tie(box_experiment):
    doc = _config(out_dir=str(box_experiment / "same"), metrics=["psnr", "ssim", "nrq"])
    doc["variants"] = [{"id": "original", "render": {"mode": "gi", "spp": 4, "bounces": 2, "seed": 5}},
                       {"id": "improved", "render": {"mode": "gi", "spp": 4, "bounces": 2, "seed": 5}}]
    report = run_experiment(parse_config(json.dumps(doc), box_experiment))
    assert len(report.cells) == 6
    assert set(report.deltas.values()) == {0.0}
    assert set(report.verdicts.values()) == {TIED}


def test_external_reference_image(box_experiment):
    run_experiment(load_config(box_experiment / "exp.json"))
    shutil.copy(box_experiment / "out" / "images" / "box__reference.ppm", box_experiment / "photo.ppm")
    doc = _config(out_dir=str(box_experiment / "ext"))
    doc["scenes"][0]["reference"] = {"image": "photo.ppm"}
    report = run_experiment(parse_config(json.dumps(doc), box_experiment))
    first = run_experiment(load_config(box_experiment / "exp.json"))
    assert emit_csv(report) == emit_csv(first)


def test_reference_size_mismatch(box_experiment):
    from renderproof.iqa import MetricPreconditionError
    from renderproof.render import DisplayImage, write_ppm

    write_ppm(box_experiment / "small.ppm", DisplayImage(np.zeros((8, 8, 3), np.uint8)))
    doc = _config(out_dir=str(box_experiment / "mm"))
    doc["scenes"][0]["reference"] = {"image": "small.ppm"}
    with pytest.raises(MetricPreconditionError, match="dimension mismatch"):
        run_experiment(parse_config(json.dumps(doc), box_experiment))


def test_write_report_outputs_are_deterministic(box_experiment):
    cfg = load_config(box_experiment / "exp.json")
    out = box_experiment / "out"
    write_report(run_experiment(cfg), out)
    first = {p: (out / p).read_bytes() for p in ("report.csv", "report.md", "manifest.json",
                                                 "figures/scores.png", "figures/box__variants.png")}
    write_report(run_experiment(cfg), out)
    for p, data in first.items():
        assert (out / p).read_bytes() == data, p
    manifest = json.loads(first["manifest.json"])
    assert manifest["seeds"]["references"] == {"box": 3}
    assert len(manifest["cells"]) == 4
