import dataclasses
from pathlib import Path

import pytest

from renderproof.scene import closed_box, load_scene

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "renderproof" / "data"
SCENES = DATA / "scenes"
GOLDEN = Path(__file__).resolve().parent / "golden"
BUNDLED_SCENES = ("garage_bay", "garage_aisle", "open_lot")


def at_resolution(scene, w, h):
    return dataclasses.replace(scene, camera=dataclasses.replace(scene.camera, resolution=(w, h)))


@pytest.fixture
def small_box():
    return closed_box(resolution=(16, 16))


@pytest.fixture(params=BUNDLED_SCENES)
def bundled_scene(request):
    return load_scene(SCENES / f"{request.param}.json")


# acceptance criteria report one line each; printed again after the run so
# they are visible without -s
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
