"""Fit the bundled NR calibration from the reference renders of the bundled experiment.

The references are the highest-quality images the package produces, so their
feature spread is the scale the no-reference score is expressed in.
"""
from pathlib import Path

from renderproof.harness import load_config
from renderproof.iqa import fit_calibration, nr_features
from renderproof.render import encode_display, render
from renderproof.scene import load_scene

DATA = Path(__file__).resolve().parents[1] / "src" / "renderproof" / "data"


def main() -> None:
    config = load_config(DATA / "experiment.json")
    features = []
    for entry in config.scenes:
        settings = entry.reference_settings
        image = encode_display(render(load_scene(entry.scene_path), settings), settings.exposure)
        features.append(nr_features(image))
        print(entry.scene_id, features[-1])
    calibration = fit_calibration(features)
    (DATA / "nr_calibration.json").write_text(calibration.to_json(), encoding="utf-8")
    print(calibration)


if __name__ == "__main__":
    main()
