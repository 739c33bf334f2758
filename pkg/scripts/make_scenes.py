"""Regenerate the bundled scene files under src/renderproof/data/scenes.

Three parking-lot stand-ins share one material vocabulary so a single pair of
override files (degraded / corrected) applies to all of them.
"""
from pathlib import Path

from renderproof.scene import Camera, Material, Primitive, Scene, closed_box, dump_scene

OUT = Path(__file__).resolve().parents[1] / "src" / "renderproof" / "data" / "scenes"
RES = (128, 96)

MATERIALS = (
    Material("floor", (0.42, 0.42, 0.40), 0.35, 0.25),
    Material("wall", (0.70, 0.68, 0.62), 1.0, 0.0),
    Material("ceiling", (0.60, 0.60, 0.60), 1.0, 0.0),
    Material("pillar", (0.80, 0.72, 0.30), 0.8, 0.05),
    Material("line", (0.85, 0.85, 0.80), 1.0, 0.0),
    Material("door", (0.20, 0.45, 0.70), 0.5, 0.2),
    Material("car_red", (0.75, 0.10, 0.08), 0.25, 0.35),
    Material("car_blue", (0.10, 0.25, 0.70), 0.25, 0.35),
    Material("car_white", (0.85, 0.85, 0.85), 0.25, 0.35),
    Material("glass", (0.08, 0.10, 0.12), 0.1, 0.6),
    Material("light", (0.8, 0.8, 0.8), 1.0, 0.0, (14.0, 13.5, 12.0)),
)


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _quad(origin, u, v, material, toward):
    # orient the front side toward the point `toward`
    centre = tuple(origin[k] + 0.5 * (u[k] + v[k]) for k in range(3))
    n = _cross(u, v)
    if sum(n[k] * (toward[k] - centre[k]) for k in range(3)) < 0:
        u, v = v, u
    return Primitive("quad", (tuple(origin), tuple(u), tuple(v)), material)


def _box(lo, hi, material, bottom=False):
    """Axis-aligned box with outward-facing quads; the bottom face is usually hidden."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    dx, dy, dz = x1 - x0, y1 - y0, z1 - z0
    c = ((x0 + x1) / 2, (y0 + y1) / 2, (z0 + z1) / 2)
    faces = [
        ((x0, y1, z0), (dx, 0, 0), (0, 0, dz), (c[0], y1 + 1, c[2])),
        ((x0, y0, z1), (dx, 0, 0), (0, dy, 0), (c[0], c[1], z1 + 1)),
        ((x0, y0, z0), (dx, 0, 0), (0, dy, 0), (c[0], c[1], z0 - 1)),
        ((x0, y0, z0), (0, 0, dz), (0, dy, 0), (x0 - 1, c[1], c[2])),
        ((x1, y0, z0), (0, 0, dz), (0, dy, 0), (x1 + 1, c[1], c[2])),
    ]
    if bottom:
        faces.append(((x0, y0, z0), (dx, 0, 0), (0, 0, dz), (c[0], y0 - 1, c[2])))
    return [_quad(o, u, v, material, t) for o, u, v, t in faces]


def _car(x, z, paint, length=4.2, width=1.8):
    """Two stacked boxes: body and cabin with dark glass."""
    hx, hz = width / 2, length / 2
    prims = _box((x - hx, 0.0, z - hz), (x + hx, 0.75, z + hz), paint)
    prims += _box((x - hx + 0.15, 0.75, z - hz + 1.0), (x + hx - 0.15, 1.35, z + hz - 1.2), "glass")
    return prims


def _lines(xs, z0, z1):
    return [_quad((x - 0.06, 0.005, z0), (0.12, 0, 0), (0, 0, z1 - z0), "line", (x, 1, z0)) for x in xs]


def _room(x0, x1, z0, z1, height, open_front=True):
    """Floor, ceiling, back and side walls, all facing inward."""
    mid = ((x0 + x1) / 2, height / 2, (z0 + z1) / 2)
    w, d = x1 - x0, z1 - z0
    prims = [
        _quad((x0, 0, z0), (w, 0, 0), (0, 0, d), "floor", mid),
        _quad((x0, height, z0), (w, 0, 0), (0, 0, d), "ceiling", mid),
        _quad((x0, 0, z0), (w, 0, 0), (0, height, 0), "wall", mid),
        _quad((x0, 0, z0), (0, 0, d), (0, height, 0), "wall", mid),
        _quad((x1, 0, z0), (0, 0, d), (0, height, 0), "wall", mid),
    ]
    if not open_front:
        prims.append(_quad((x0, 0, z1), (w, 0, 0), (0, height, 0), "wall", mid))
    return prims


def _ceiling_lights(xs, zs, height, size=(2.0, 0.6)):
    return [_quad((x - size[0] / 2, height - 0.01, z - size[1] / 2), (size[0], 0, 0), (0, 0, size[1]),
                  "light", (x, 0, z)) for x in xs for z in zs]


def garage_bay() -> Scene:
    """Underground bay: three cars nose-in against the back wall, strip lights overhead."""
    h = 3.0
    prims = _room(-7, 7, -12, 6, h, open_front=False)
    prims += _ceiling_lights((-4.5, 0.0, 4.5), (-9.0, -4.0, 1.0), h)
    prims += _lines((-3.75, -1.25, 1.25, 3.75), -11.9, -6.5)
    prims += _car(-2.5, -9.2, "car_red") + _car(0.0, -9.0, "car_white") + _car(2.5, -9.3, "car_blue")
    prims += _box((-6.6, 0, -5.2), (-5.8, h, -4.4), "pillar") + _box((5.8, 0, -5.2), (6.6, h, -4.4), "pillar")
    prims.append(_quad((-0.9, 0, -11.99), (1.8, 0, 0), (0, 2.2, 0), "door", (0, 1, 0)))
    cam = Camera((0.0, 1.6, 3.5), (0.0, 0.9, -8.0), (0.0, 1.0, 0.0), 55.0, RES)
    return Scene("garage_bay", cam, MATERIALS, tuple(prims), (0.0, 0.0, 0.0))


def garage_aisle() -> Scene:
    """Looking down a driving aisle with cars parked on the left and pillars on the right."""
    h = 2.8
    prims = _room(-5, 5, -24, 4, h, open_front=False)
    prims += _ceiling_lights((0.0,), (-20.0, -14.0, -8.0, -2.0), h, size=(0.6, 3.0))
    prims += _ceiling_lights((-3.5,), (-16.0, -6.0), h)
    for i, (z, paint) in enumerate(((-4.0, "car_blue"), (-10.0, "car_white"), (-16.0, "car_red"))):
        prims += _car(-3.3, z, paint, length=4.2, width=1.8)
    for z in (-3.0, -11.0, -19.0):
        prims += _box((3.6, 0, z - 0.4), (4.4, h, z + 0.4), "pillar")
    prims += _lines((-2.1,), -22.0, 1.0)
    prims.append(_quad((-1.0, 0, -23.99), (2.0, 0, 0), (0, 2.2, 0), "door", (0, 1, 0)))
    cam = Camera((0.8, 1.5, 2.5), (-0.6, 0.9, -14.0), (0.0, 1.0, 0.0), 60.0, RES)
    return Scene("garage_aisle", cam, MATERIALS, tuple(prims), (0.0, 0.0, 0.0))


def open_lot() -> Scene:
    """Open-air lot under a bright sky, with a low wall and a service door behind the cars."""
    prims = [_quad((-30, 0, -30), (60, 0, 0), (0, 0, 40), "floor", (0, 1, 0))]
    prims += _box((-8, 0, -12.5), (8, 2.5, -12.0), "wall")
    prims.append(_quad((-1.0, 0, -11.99), (2.0, 0, 0), (0, 2.1, 0), "door", (0, 1, 0)))
    prims += _lines((-3.75, -1.25, 1.25, 3.75), -11.8, -6.5)
    prims += _car(-2.5, -9.0, "car_blue") + _car(2.5, -9.2, "car_red") + _car(5.0, -8.8, "car_white")
    prims += _box((-7.0, 0, -7.2), (-6.8, 4.5, -7.0), "pillar")
    prims.append(_quad((-7.4, 4.5, -7.6), (1.0, 0, 0), (0, 0, 1.0), "light", (-7, 0, -7)))
    cam = Camera((0.5, 1.7, 3.0), (0.3, 0.8, -9.0), (0.0, 1.0, 0.0), 55.0, RES)
    return Scene("open_lot", cam, MATERIALS, tuple(prims), (0.55, 0.65, 0.85))


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for scene in (garage_bay(), garage_aisle(), open_lot()):
        (OUT / f"{scene.name}.json").write_text(dump_scene(scene), encoding="utf-8")
    (OUT / "furnace_box.json").write_text(dump_scene(closed_box()), encoding="utf-8")


if __name__ == "__main__":
    main()
