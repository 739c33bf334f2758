import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from renderproof.harness import IMPROVED, REGRESSED, TIED, classify
from renderproof.iqa import mse, psnr, ssim, zscore
from renderproof.render import LinearImage, Lightmap, LightmapSet, encode_display, read_lightmaps, \
    write_lightmaps
from renderproof.scene import Camera, Material, Primitive, Scene, dump_scene, parse_scene

finite = st.floats(-1e6, 1e6, allow_nan=False)
unit = st.floats(0.0, 1.0)


# -- normalization -------------------------------------------------------------

@given(st.lists(finite, min_size=2, max_size=60).filter(lambda v: max(v) - min(v) > 1e-3))
def test_zscore_standardizes(values):
    z = np.array(zscore(values))
    assert abs(z.mean()) < 1e-9
    assert abs(np.sqrt(np.mean(z ** 2)) - 1.0) < 1e-9


@given(st.lists(finite, min_size=1, max_size=60, unique=True))
def test_zscore_preserves_rank(values):
    order = np.argsort(values)
    v = np.asarray(values)[order]
    z = np.asarray(zscore(values))[order]
    assert np.all(np.diff(z) >= 0)
    # gaps far below the spread's rounding error may collapse, all others stay strict
    if len(v) > 1 and np.diff(v).min() > 1e-9 * (v[-1] - v[0]):
        assert np.all(np.diff(z) > 0)


@given(finite, st.integers(1, 20))
def test_zscore_constant_is_zero(value, n):
    assert zscore([value] * n) == [0.0] * n


# -- full-reference metrics ------------------------------------------------------

pixels = arrays(np.float64, (12, 12), elements=st.integers(0, 255).map(float))


@settings(max_examples=60, deadline=None)
@given(pixels, pixels)
def test_ssim_symmetric_and_bounded(a, b):
    s = ssim(a, b)
    assert abs(s - ssim(b, a)) < 1e-9
    assert -1.0 <= s <= 1.0
    assert abs(ssim(a, a) - 1.0) < 1e-9


@settings(max_examples=60, deadline=None)
@given(pixels, pixels)
def test_mse_psnr_consistent(a, b):
    e = mse(a, b)
    assert e == mse(b, a) >= 0.0
    p = psnr(a, b)
    assert (p == math.inf) == (e == 0.0)
    if e > 0:
        assert abs(p - 10 * math.log10(255.0 ** 2 / e)) < 1e-9


# -- verdicts --------------------------------------------------------------------

@given(finite, st.floats(0.0, 10.0))
def test_classify_is_antisymmetric(delta, eps):
    mirror = {IMPROVED: REGRESSED, REGRESSED: IMPROVED, TIED: TIED}
    assert classify(-delta, eps) == mirror[classify(delta, eps)]
    if abs(delta) <= eps:
        assert classify(delta, eps) == TIED


# -- display encoding ------------------------------------------------------------

@given(st.lists(st.floats(0.0, 1e3), min_size=2, max_size=40), st.floats(0.01, 100.0))
def test_encode_is_monotone_in_radiance(values, exposure):
    v = np.sort(np.array(values))
    img = LinearImage(np.repeat(v[None, :, None], 3, axis=2))
    out = encode_display(img, exposure).pixels[0, :, 0].astype(int)
    assert np.all(np.diff(out) >= 0)
    assert out.min() >= 0 and out.max() <= 255


# -- scene files -----------------------------------------------------------------

vec = st.tuples(finite, finite, finite)
colour = st.tuples(unit, unit, unit)
edge = st.floats(0.1, 100.0)


@st.composite
def materials(draw):
    names = draw(st.lists(st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True), min_size=1, max_size=4,
                          unique=True))
    return tuple(Material(n, draw(colour), draw(unit), draw(unit),
                          draw(st.tuples(*[st.floats(0.0, 50.0)] * 3))) for n in names)


@st.composite
def primitives(draw, names):
    kind = draw(st.sampled_from(("sphere", "quad", "triangle")))
    o = draw(vec)
    a, b = draw(edge), draw(edge)
    if kind == "sphere":
        geometry = (o, a)
    elif kind == "quad":
        geometry = (o, (a, 0.0, 0.0), (0.0, b, 0.0))
    else:
        geometry = (o, (o[0] + a, o[1], o[2]), (o[0], o[1] + b, o[2]))
    return Primitive(kind, geometry, draw(st.sampled_from(names)))


@st.composite
def scenes(draw):
    mats = draw(materials())
    names = [m.name for m in mats]
    prims = tuple(draw(st.lists(primitives(names), min_size=1, max_size=5)))
    cam = Camera((0.0, 0.0, 5.0), (0.0, 0.0, 0.0), (0.0, 1.0, 0.0), draw(st.floats(1.0, 170.0)),
                 (draw(st.integers(1, 64)), draw(st.integers(1, 64))))
    return Scene(draw(st.from_regex(r"[a-z]{1,10}", fullmatch=True)), cam, mats, prims, draw(colour))


@settings(max_examples=60, deadline=None)
@given(scenes())
def test_scene_round_trip(scene):
    text = dump_scene(scene)
    assert parse_scene(text) == scene
    assert dump_scene(parse_scene(text)) == text


# -- lightmap files --------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 31)), min_size=0,
                max_size=4, unique_by=lambda t: t[2]))
def test_lightmap_file_round_trip(tmp_path_factory, shapes):
    rng = np.random.default_rng(len(shapes))
    entries = []
    for h, w, prim in shapes:
        used = rng.random((h, w)) < 0.8
        used[0, 0] = True
        entries.append(Lightmap(prim, used, (rng.random((h, w, 3)) * used[..., None]).astype(np.float32)))
    lm = LightmapSet(tuple(entries))
    path = tmp_path_factory.mktemp("lmp") / "x.lmp"
    write_lightmaps(path, lm)
    back = read_lightmaps(path)
    assert len(back.entries) == len(entries)
    for x, y in zip(back.entries, entries):
        assert x.primitive == y.primitive
        assert np.array_equal(x.used, y.used)
        assert np.array_equal(x.irradiance, y.irradiance)
