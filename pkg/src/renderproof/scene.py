"""Scene data model, scene/override file parsing and material overrides.

Scene files are JSON documents. A minimal one looks like::

    {
      "name": "slab",
      "camera": {"position": [0, 1, 3], "look_at": [0, 0, 0], "up": [0, 1, 0],
                 "fov_degrees": 45, "resolution": [64, 48]},
      "materials": [{"name": "floor", "albedo": [0.5, 0.5, 0.5], "roughness": 1}],
      "primitives": [{"type": "quad", "origin": [-1, 0, 1], "edge_u": [2, 0, 0],
                      "edge_v": [0, 0, -2], "material": "floor"}],
      "environment": {"radiance": [1, 1, 1]}
    }

Quads and triangles are two-sided for shading. Their *front* side, the one
that receives a lightmap when baking, is the side ``edge_u x edge_v`` (for
triangles ``(p1 - p0) x (p2 - p0)``) points to.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

Vec3 = tuple[float, float, float]

PRIMITIVE_KINDS = ("sphere", "quad", "triangle")
_GEOMETRY_KEYS = {
    "sphere": ("center", "radius"),
    "quad": ("origin", "edge_u", "edge_v"),
    "triangle": ("p0", "p1", "p2"),
}


class SceneError(ValueError):
    """Base class for scene and override input errors."""


class SceneSyntaxError(SceneError):
    """The document is not well-formed JSON."""

    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"syntax error at line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


class SceneSchemaError(SceneError):
    """The document is well-formed but does not describe a valid scene."""


class UnknownMaterialError(SceneSchemaError, KeyError):
    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class Camera:
    position: Vec3
    look_at: Vec3
    up: Vec3
    vertical_fov: float
    resolution: tuple[int, int]

    @property
    def width(self) -> int:
        return self.resolution[0]

    @property
    def height(self) -> int:
        return self.resolution[1]


@dataclass(frozen=True)
class Material:
    name: str
    albedo: Vec3
    roughness: float
    specular: float = 0.0
    emission: Vec3 = (0.0, 0.0, 0.0)

    @property
    def is_emissive(self) -> bool:
        return any(c > 0 for c in self.emission)


@dataclass(frozen=True)
class Primitive:
    """A sphere, quad or triangle.

    ``geometry`` holds the per-kind values in file order: ``(center, radius)``,
    ``(origin, edge_u, edge_v)`` or ``(p0, p1, p2)``.
    """

    kind: str
    geometry: tuple
    material: str
    lightmap_id: Optional[int] = None


@dataclass(frozen=True)
class MaterialOverride:
    target: str
    albedo: Optional[Vec3] = None
    roughness: Optional[float] = None
    specular: Optional[float] = None
    emission: Optional[Vec3] = None


@dataclass(frozen=True)
class Scene:
    name: str
    camera: Camera
    materials: tuple[Material, ...]
    primitives: tuple[Primitive, ...]
    environment_radiance: Vec3 = (0.0, 0.0, 0.0)

    def material(self, name: str) -> Material:
        for m in self.materials:
            if m.name == name:
                return m
        raise UnknownMaterialError(f"unknown material {name!r}")

    def material_index(self, name: str) -> int:
        for i, m in enumerate(self.materials):
            if m.name == name:
                return i
        raise UnknownMaterialError(f"unknown material {name!r}")


# ---------------------------------------------------------------------------
# vector helpers (plain tuples; the heavy lifting happens in render)

def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def _finite(values) -> bool:
    return all(math.isfinite(v) for v in values)


# ---------------------------------------------------------------------------
# invariant checks shared by the parser and validate_scene

def _camera_problems(cam: Camera) -> list[str]:
    out = []
    for label, v in (("position", cam.position), ("look_at", cam.look_at), ("up", cam.up)):
        if not _finite(v):
            out.append(f"camera {label} is not finite")
    if out:
        return out
    if not (0.0 < cam.vertical_fov < 180.0):
        out.append("camera fov_degrees out of (0,180)")
    w, h = cam.resolution
    if w < 1 or h < 1:
        out.append("camera resolution must be positive")
    view = _sub(cam.look_at, cam.position)
    if _norm(view) == 0.0:
        out.append("camera look_at equals position")
    elif _norm(_cross(view, cam.up)) <= 1e-12 * _norm(view) * max(_norm(cam.up), 1e-300):
        out.append("camera up is parallel to view direction")
    return out


def _range_problems(label: str, value: float, lo: float, hi: float = math.inf) -> list[str]:
    if not math.isfinite(value) or value < lo or value > hi:
        bounds = f"[{lo:g},{hi:g}]" if math.isfinite(hi) else f">= {lo:g}"
        if math.isfinite(hi):
            return [f"{label} out of {bounds}"]
        return [f"{label} must be {bounds}"]
    return []


def _material_problems(m: Material) -> list[str]:
    out = []
    prefix = f"material {m.name!r}: "
    if not m.name:
        out.append("material name is empty")
    for c in m.albedo:
        if not (math.isfinite(c) and 0.0 <= c <= 1.0):
            out.append(prefix + "albedo out of [0,1]")
            break
    out += [prefix + p for p in _range_problems("roughness", m.roughness, 0.0, 1.0)]
    out += [prefix + p for p in _range_problems("specular", m.specular, 0.0, 1.0)]
    for c in m.emission:
        if not (math.isfinite(c) and c >= 0.0):
            out.append(prefix + "emission must be >= 0")
            break
    return out


def _primitive_problems(index: int, p: Primitive) -> list[str]:
    prefix = f"primitive {index} ({p.kind}): "
    if p.kind not in PRIMITIVE_KINDS:
        return [prefix + "unknown primitive type"]
    if p.kind == "sphere":
        center, radius = p.geometry
        if not _finite(center) or not math.isfinite(radius):
            return [prefix + "geometry is not finite"]
        if radius <= 0.0:
            return [prefix + "radius must be > 0"]
        return []
    a, b, c = p.geometry
    if not (_finite(a) and _finite(b) and _finite(c)):
        return [prefix + "geometry is not finite"]
    if p.kind == "quad":
        eu, ev = b, c
    else:
        eu, ev = _sub(b, a), _sub(c, a)
    if _norm(eu) == 0.0 or _norm(ev) == 0.0:
        return [prefix + "degenerate (zero-length edge)"]
    if _norm(_cross(eu, ev)) <= 1e-12 * _norm(eu) * _norm(ev):
        return [prefix + ("degenerate (collinear points)" if p.kind == "triangle"
                          else "degenerate (parallel edges)")]
    return []


def validate_scene(scene: Scene) -> list[str]:
    """Return one message per violated scene invariant, in document order."""
    problems = _camera_problems(scene.camera)
    seen: set[str] = set()
    for m in scene.materials:
        problems += _material_problems(m)
        if m.name in seen:
            problems.append(f"duplicate material name {m.name!r}")
        seen.add(m.name)
    for i, p in enumerate(scene.primitives):
        problems += _primitive_problems(i, p)
        if p.material not in seen:
            problems.append(f"primitive {i} references unknown material {p.material!r}")
    env = scene.environment_radiance
    if not all(math.isfinite(c) and c >= 0.0 for c in env):
        problems.append("environment radiance must be >= 0")
    if not (any(c > 0 for c in env) or any(m.is_emissive for m in scene.materials)):
        problems.append("no emitter")
    return problems


# ---------------------------------------------------------------------------
# parsing

def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneSyntaxError(exc.msg, exc.lineno, exc.colno) from None


def _expect_keys(obj, where: str, required: Iterable[str], optional: Iterable[str] = ()):
    if not isinstance(obj, dict):
        raise SceneSchemaError(f"{where}: expected an object")
    required = tuple(required)
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise SceneSchemaError(f"{where}: unknown key {key!r}")
    for key in required:
        if key not in obj:
            raise SceneSchemaError(f"{where}: missing required field {key!r}")


def _number(value, where: str) -> float:
    # bool is an int subclass in Python; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneSchemaError(f"{where}: expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise SceneSchemaError(f"{where}: expected a finite number")
    return value


def _vec3(value, where: str) -> Vec3:
    if not isinstance(value, list) or len(value) != 3:
        raise SceneSchemaError(f"{where}: expected an array of 3 numbers")
    return tuple(_number(v, where) for v in value)  # type: ignore[return-value]


def _string(value, where: str) -> str:
    if not isinstance(value, str):
        raise SceneSchemaError(f"{where}: expected a string")
    return value


def _raise_first(problems: list[str]) -> None:
    if problems:
        raise SceneSchemaError(problems[0])


def _parse_camera(obj) -> Camera:
    _expect_keys(obj, "camera", ("position", "look_at", "up", "fov_degrees", "resolution"))
    res = obj["resolution"]
    if (not isinstance(res, list) or len(res) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v) for v in res)):
        raise SceneSchemaError("camera.resolution: expected [width, height] integers")
    cam = Camera(
        position=_vec3(obj["position"], "camera.position"),
        look_at=_vec3(obj["look_at"], "camera.look_at"),
        up=_vec3(obj["up"], "camera.up"),
        vertical_fov=_number(obj["fov_degrees"], "camera.fov_degrees"),
        resolution=(int(res[0]), int(res[1])),
    )
    _raise_first(_camera_problems(cam))
    return cam


def _parse_material(obj, i: int) -> Material:
    where = f"materials[{i}]"
    _expect_keys(obj, where, ("name", "albedo", "roughness"), ("specular", "emission"))
    m = Material(
        name=_string(obj["name"], where + ".name"),
        albedo=_vec3(obj["albedo"], where + ".albedo"),
        roughness=_number(obj["roughness"], where + ".roughness"),
        specular=_number(obj.get("specular", 0.0), where + ".specular"),
        emission=_vec3(obj.get("emission", [0.0, 0.0, 0.0]), where + ".emission"),
    )
    _raise_first(_material_problems(m))
    return m


def _parse_primitive(obj, i: int) -> Primitive:
    where = f"primitives[{i}]"
    if not isinstance(obj, dict):
        raise SceneSchemaError(f"{where}: expected an object")
    kind = _string(obj.get("type"), where + ".type") if "type" in obj else None
    if kind is None:
        raise SceneSchemaError(f"{where}: missing required field 'type'")
    if kind not in PRIMITIVE_KINDS:
        raise SceneSchemaError(f"{where}: unknown primitive type {kind!r}")
    keys = _GEOMETRY_KEYS[kind]
    _expect_keys(obj, where, ("type",) + keys + ("material",))
    if kind == "sphere":
        geometry = (_vec3(obj["center"], where + ".center"), _number(obj["radius"], where + ".radius"))
    else:
        geometry = tuple(_vec3(obj[k], f"{where}.{k}") for k in keys)
    p = Primitive(kind=kind, geometry=geometry, material=_string(obj["material"], where + ".material"))
    _raise_first(_primitive_problems(i, p))
    return p


def parse_scene(text: str) -> Scene:
    """Parse a scene document.

    Raises `SceneSyntaxError` for malformed JSON and `SceneSchemaError` for
    anything structurally or numerically wrong. A scene without emitters is
    accepted here; `validate_scene` reports it.
    """
    doc = _load_json(text)
    _expect_keys(doc, "scene", ("name", "camera", "materials", "primitives"), ("environment",))
    name = _string(doc["name"], "name")
    camera = _parse_camera(doc["camera"])
    if not isinstance(doc["materials"], list):
        raise SceneSchemaError("materials: expected an array")
    materials = []
    names: set[str] = set()
    for i, m in enumerate(doc["materials"]):
        mat = _parse_material(m, i)
        if mat.name in names:
            raise SceneSchemaError(f"duplicate material name {mat.name!r}")
        names.add(mat.name)
        materials.append(mat)
    if not isinstance(doc["primitives"], list):
        raise SceneSchemaError("primitives: expected an array")
    primitives = []
    for i, p in enumerate(doc["primitives"]):
        prim = _parse_primitive(p, i)
        if prim.material not in names:
            raise SceneSchemaError(f"primitives[{i}]: unresolved material {prim.material!r}")
        primitives.append(prim)
    env = (0.0, 0.0, 0.0)
    if "environment" in doc:
        _expect_keys(doc["environment"], "environment", ("radiance",))
        env = _vec3(doc["environment"]["radiance"], "environment.radiance")
        if any(c < 0 for c in env):
            raise SceneSchemaError("environment.radiance must be >= 0")
    return Scene(name=name, camera=camera, materials=tuple(materials),
                 primitives=tuple(primitives), environment_radiance=env)


def dump_scene(scene: Scene) -> str:
    """Serialize a scene back to a document `parse_scene` reads identically."""
    cam = scene.camera
    doc = {
        "name": scene.name,
        "camera": {
            "position": list(cam.position),
            "look_at": list(cam.look_at),
            "up": list(cam.up),
            "fov_degrees": cam.vertical_fov,
            "resolution": list(cam.resolution),
        },
        "materials": [
            {"name": m.name, "albedo": list(m.albedo), "roughness": m.roughness,
             "specular": m.specular, "emission": list(m.emission)}
            for m in scene.materials
        ],
        "primitives": [],
        "environment": {"radiance": list(scene.environment_radiance)},
    }
    for p in scene.primitives:
        entry = {"type": p.kind}
        if p.kind == "sphere":
            entry["center"] = list(p.geometry[0])
            entry["radius"] = p.geometry[1]
        else:
            for key, value in zip(_GEOMETRY_KEYS[p.kind], p.geometry):
                entry[key] = list(value)
        entry["material"] = p.material
        doc["primitives"].append(entry)
    return json.dumps(doc, indent=2) + "\n"


def load_scene(path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return parse_scene(fh.read())


# ---------------------------------------------------------------------------
# material overrides

def parse_overrides(text: str) -> list[MaterialOverride]:
    doc = _load_json(text)
    if not isinstance(doc, list):
        raise SceneSchemaError("overrides: expected an array")
    out = []
    for i, obj in enumerate(doc):
        where = f"overrides[{i}]"
        _expect_keys(obj, where, ("target",), ("albedo", "roughness", "specular", "emission"))
        o = MaterialOverride(
            target=_string(obj["target"], where + ".target"),
            albedo=_vec3(obj["albedo"], where + ".albedo") if "albedo" in obj else None,
            roughness=_number(obj["roughness"], where + ".roughness") if "roughness" in obj else None,
            specular=_number(obj["specular"], where + ".specular") if "specular" in obj else None,
            emission=_vec3(obj["emission"], where + ".emission") if "emission" in obj else None,
        )
        _raise_first([f"{where}: {p}" for p in override_problems(o)])
        out.append(o)
    return out


def load_overrides(path) -> list[MaterialOverride]:
    with open(path, encoding="utf-8") as fh:
        return parse_overrides(fh.read())


def override_problems(o: MaterialOverride) -> list[str]:
    if all(v is None for v in (o.albedo, o.roughness, o.specular, o.emission)):
        return ["override sets no field"]
    probe = Material(
        name=o.target or "?",
        albedo=o.albedo if o.albedo is not None else (0.0, 0.0, 0.0),
        roughness=o.roughness if o.roughness is not None else 0.0,
        specular=o.specular if o.specular is not None else 0.0,
        emission=o.emission if o.emission is not None else (0.0, 0.0, 0.0),
    )
    return _material_problems(probe)


def apply_overrides(scene: Scene, overrides: Sequence[MaterialOverride]) -> Scene:
    """Return a copy of `scene` with material fields replaced, last override winning."""
    materials = {m.name: m for m in scene.materials}
    for o in overrides:
        if o.target not in materials:
            raise UnknownMaterialError(f"override targets unknown material {o.target!r}")
        problems = override_problems(o)
        if problems:
            raise SceneSchemaError(problems[0])
        changes = {k: getattr(o, k) for k in ("albedo", "roughness", "specular", "emission")
                   if getattr(o, k) is not None}
        materials[o.target] = dataclasses.replace(materials[o.target], **changes)
    return dataclasses.replace(scene, materials=tuple(materials[m.name] for m in scene.materials))


# ---------------------------------------------------------------------------
# builders

def closed_box(emission: float = 0.2, albedo: float = 0.5, size: float = 2.0,
               resolution: tuple[int, int] = (128, 128)) -> Scene:
    """Closed cube of inward-facing diffuse emitters with the camera inside.

    Every wall emits ``emission`` and reflects ``albedo``, so the equilibrium
    radiance everywhere is ``emission / (1 - albedo)``.
    """
    s = size / 2.0
    wall = Material("wall", (albedo,) * 3, 1.0, 0.0, (emission,) * 3)
    faces = [
        ((-s, -s, -s), (size, 0.0, 0.0), (0.0, 0.0, size)),
        ((-s, s, -s), (size, 0.0, 0.0), (0.0, 0.0, size)),
        ((-s, -s, -s), (0.0, 0.0, size), (0.0, size, 0.0)),
        ((s, -s, -s), (0.0, 0.0, size), (0.0, size, 0.0)),
        ((-s, -s, -s), (size, 0.0, 0.0), (0.0, size, 0.0)),
        ((-s, -s, s), (size, 0.0, 0.0), (0.0, size, 0.0)),
    ]
    prims = []
    for o, u, v in faces:
        # front side must face the box interior
        centre = tuple(o[k] + 0.5 * (u[k] + v[k]) for k in range(3))
        n = _cross(u, v)
        if sum(n[k] * centre[k] for k in range(3)) > 0:
            u, v = v, u
        prims.append(Primitive("quad", (o, u, v), "wall"))
    prims = tuple(prims)
    cam = Camera((0.0, 0.0, 0.5 * s), (0.0, 0.0, -s), (0.0, 1.0, 0.0), 70.0, tuple(resolution))
    return Scene("closed_box", cam, (wall,), prims, (0.0, 0.0, 0.0))
