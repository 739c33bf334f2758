"""Numba kernels: intersection, keyed RNG, path integrator, baking.

Everything here works on flat arrays produced by `renderproof.render.packing`.
Each pixel/texel is computed by one loop iteration that writes only its own
output slot, and every random number is a pure function of
(seed, pixel or texel, sample, vertex, dimension). Results therefore do not
depend on the number of worker threads.
"""
import math

import numpy as np
from numba import njit, prange

SPHERE = 0
QUAD = 1
TRIANGLE = 2

RAY_OFFSET = 1e-4
INV_PI = 1.0 / math.pi

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S8 = np.uint64(8)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53
_S32 = np.uint64(32)
_LO32 = np.uint64(0xFFFFFFFF)
_TO_UNIT32 = 1.0 / 4294967296.0  # 2**-32
FAR = 1e30
# no nnan/ninf: misses and degenerate cases rely on IEEE semantics
_FAST = {"nsz", "arcp", "contract", "afn", "reassoc"}
# Taylor coefficients 1/(2k)! of cos
_C1 = 1.0 / 2
_C2 = 1.0 / 24
_C3 = 1.0 / 720
_C4 = 1.0 / 40320
_C5 = 1.0 / 3628800
_C6 = 1.0 / 479001600
_C7 = 1.0 / 87178291200
_C8 = 1.0 / 20922789888000
_C9 = 1.0 / 6402373705728000
_C10 = 1.0 / 2432902008176640000


# ---------------------------------------------------------------------------
# counter-based random numbers (splitmix64 finalizer)

@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def stream_key(seed, a, b):
    """Key for one (pixel or texel, sample) stream under `seed`."""
    k = mix64(seed + _GOLDEN)
    k = mix64(k ^ (np.uint64(a) * _GOLDEN))
    return mix64(k ^ (np.uint64(b) + _GOLDEN))


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def draw(key, vertex, dim):
    z = mix64(key + (np.uint64(vertex) << _S8 | np.uint64(dim)) * _GOLDEN)
    return np.float64(z >> _S11) * _TO_UNIT


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def draw2(key, vertex, dim):
    """Two uniforms in [0, 1) from one mix: the high and low 32 bits."""
    z = mix64(key + (np.uint64(vertex) << _S8 | np.uint64(dim)) * _GOLDEN)
    return np.float64(z >> _S32) * _TO_UNIT32, np.float64(z & _LO32) * _TO_UNIT32


# ---------------------------------------------------------------------------
# geometry

@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def _dot(ax, ay, az, bx, by, bz):
    return ax * bx + ay * by + az * bz


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def _hit_prims(kind, geo, ox, oy, oz, dx, dy, dz, tmax, any_hit):
    best = tmax
    hit = -1
    bu = 0.0
    bv = 0.0
    for i in range(kind.shape[0]):
        if kind[i] == SPHERE:
            cx = ox - geo[i, 0]
            cy = oy - geo[i, 1]
            cz = oz - geo[i, 2]
            r = geo[i, 3]
            b = cx * dx + cy * dy + cz * dz
            c = cx * cx + cy * cy + cz * cz - r * r
            a = dx * dx + dy * dy + dz * dz
            disc = b * b - a * c
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            t = (-b - sq) / a
            if t <= 1e-9:
                t = (-b + sq) / a
            if t > 1e-9 and t < best:
                best = t
                hit = i
                if any_hit:
                    break
        else:
            # geo row: origin 0:3, edge_u 3:6, edge_v 6:9, normal (unscaled) 9:12,
            # normal / |normal|^2 12:15, unit normal 15:18.
            # Branch-free on purpose: hit/miss is unpredictable and mispredicts
            # cost more than the arithmetic. NaN from denom == 0 fails every test.
            denom = geo[i, 9] * dx + geo[i, 10] * dy + geo[i, 11] * dz
            qx = geo[i, 0] - ox
            qy = geo[i, 1] - oy
            qz = geo[i, 2] - oz
            t = (geo[i, 9] * qx + geo[i, 10] * qy + geo[i, 11] * qz) / denom
            px = t * dx - qx
            py = t * dy - qy
            pz = t * dz - qz
            # u = w . (p x edge_v), v = w . (edge_u x p)
            u = (geo[i, 12] * (py * geo[i, 8] - pz * geo[i, 7])
                 + geo[i, 13] * (pz * geo[i, 6] - px * geo[i, 8])
                 + geo[i, 14] * (px * geo[i, 7] - py * geo[i, 6]))
            v = (geo[i, 12] * (geo[i, 4] * pz - geo[i, 5] * py)
                 + geo[i, 13] * (geo[i, 5] * px - geo[i, 3] * pz)
                 + geo[i, 14] * (geo[i, 3] * py - geo[i, 4] * px))
            lim = 2.0 if kind[i] == QUAD else 1.0
            ok = ((t > 1e-9) & (t < best) & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (v <= 1.0)
                  & (u + v <= lim))
            best = t if ok else best
            hit = i if ok else hit
            bu = u if ok else bu
            bv = v if ok else bv
            if any_hit and hit >= 0:
                break
    return best, hit, bu, bv


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def intersect(kind, geo, ox, oy, oz, dx, dy, dz, tmax):
    """Closest hit along the ray in (1e-9, tmax).

    Returns (t, prim, u, v); prim is -1 on a miss. (u, v) are the
    parallelogram coordinates for quads and triangles.
    """
    return _hit_prims(kind, geo, ox, oy, oz, dx, dy, dz, tmax, False)


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def occluded(kind, geo, ox, oy, oz, dx, dy, dz, tmax):
    t, hit, u, v = _hit_prims(kind, geo, ox, oy, oz, dx, dy, dz, tmax, True)
    return hit >= 0


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def normal_at(kind, geo, i, px, py, pz):
    if kind[i] == SPHERE:
        r = geo[i, 3]
        return (px - geo[i, 0]) / r, (py - geo[i, 1]) / r, (pz - geo[i, 2]) / r
    return geo[i, 15], geo[i, 16], geo[i, 17]


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def _unit_circle(u):
    """(cos, sin) of 2*pi*u with a single trig call."""
    # cos(x) = -cos(x - pi) by its Taylor series on [-pi, pi); truncation
    # error < 4e-9 and no libm call on the hot path
    x = 2.0 * math.pi * u - math.pi
    y = x * x
    c = -(1.0 + y * (-_C1 + y * (_C2 + y * (-_C3 + y * (_C4 + y * (-_C5 + y * (
        _C6 + y * (-_C7 + y * (_C8 + y * (-_C9 + y * _C10))))))))))
    sn = math.sqrt(max(0.0, 1.0 - c * c))
    return c, (sn if u < 0.5 else -sn)


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def onb(nx, ny, nz):
    """Orthonormal tangent pair for unit normal n (Duff et al. 2017)."""
    sign = 1.0 if nz >= 0.0 else -1.0
    a = -1.0 / (sign + nz)
    b = nx * ny * a
    return (1.0 + sign * nx * nx * a, sign * b, -sign * nx,
            b, sign + ny * ny * a, -ny)


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def sample_cosine(nx, ny, nz, u1, u2):
    r = math.sqrt(u1)
    c, sn = _unit_circle(u2)
    lx = r * c
    ly = r * sn
    lz = math.sqrt(max(0.0, 1.0 - u1))
    tx, ty, tz, bx, by, bz = onb(nx, ny, nz)
    return (lx * tx + ly * bx + lz * nx,
            lx * ty + ly * by + lz * ny,
            lx * tz + ly * bz + lz * nz)


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def sample_cone(ax, ay, az, cos_max, u1, u2):
    cos_t = 1.0 - u1 * (1.0 - cos_max)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    c, sn = _unit_circle(u2)
    lx = sin_t * c
    ly = sin_t * sn
    tx, ty, tz, bx, by, bz = onb(ax, ay, az)
    return (lx * tx + ly * bx + cos_t * ax,
            lx * ty + ly * by + cos_t * ay,
            lx * tz + ly * bz + cos_t * az)


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def sample_point(kind, geo, i, u1, u2):
    """Uniform point on primitive i (by area) and its unit normal."""
    if kind[i] == SPHERE:
        z = 1.0 - 2.0 * u1
        r = math.sqrt(max(0.0, 1.0 - z * z))
        c, sn = _unit_circle(u2)
        nx = r * c
        ny = r * sn
        rad = geo[i, 3]
        return (geo[i, 0] + rad * nx, geo[i, 1] + rad * ny, geo[i, 2] + rad * z, nx, ny, z)
    if kind[i] == TRIANGLE and u1 + u2 > 1.0:
        u1 = 1.0 - u1
        u2 = 1.0 - u2
    return (geo[i, 0] + u1 * geo[i, 3] + u2 * geo[i, 6],
            geo[i, 1] + u1 * geo[i, 4] + u2 * geo[i, 7],
            geo[i, 2] + u1 * geo[i, 5] + u2 * geo[i, 8],
            geo[i, 15], geo[i, 16], geo[i, 17])


# ---------------------------------------------------------------------------
# light transport

@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def light_sample(kind, geo, prim_mat, emis, em_prims, em_cdf, em_total,
                 px, py, pz, nx, ny, nz, u_pick, u1, u2):
    """One uniform-area emitter sample for next-event estimation at p.

    Returns (light point, valid flag, weighted emission) where the weight is
    Le * G * area / pi, the Lambertian response for albedo 1, times the
    power-heuristic MIS weight against cosine sampling. Invalid samples
    carry zero emission.
    """
    if em_prims.shape[0] == 0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    pick = u_pick * em_total
    n_em = em_prims.shape[0]
    if n_em <= 32:
        # branch-free count: an early-exit scan mispredicts on almost every call
        j = 0
        for i in range(n_em - 1):
            j += em_cdf[i] <= pick
    else:
        j = min(np.searchsorted(em_cdf, pick, side="right"), n_em - 1)
    li = em_prims[j]
    qx, qy, qz, lnx, lny, lnz = sample_point(kind, geo, li, u1, u2)
    dx = qx - px
    dy = qy - py
    dz = qz - pz
    d2 = dx * dx + dy * dy + dz * dz
    inv = 1.0 / math.sqrt(max(d2, 1e-300))
    dx *= inv
    dy *= inv
    dz *= inv
    cos_p = _dot(nx, ny, nz, dx, dy, dz)
    cos_l = abs(_dot(lnx, lny, lnz, dx, dy, dz))
    # selects instead of early returns: samples on the shading point's own
    # plane are common and unpredictable, so branches here mispredict
    ok = (d2 > 1e-20) & (cos_p > 0.0) & (cos_l > 0.0)
    m = prim_mat[li]
    # Le * G * area / pi times the power heuristic; with pdfs pl (light, solid
    # angle) and pc (cosine) the product reduces to pc * pl / (pl^2 + pc^2)
    pl = d2 / max(cos_l * em_total, 1e-300)
    pc = cos_p * INV_PI
    w = pc * pl / (pl * pl + pc * pc)
    w = w if ok else 0.0
    return qx, qy, qz, 1.0 if ok else 0.0, emis[m, 0] * w, emis[m, 1] * w, emis[m, 2] * w


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def intersect_many(kind, geo, ray, best, hit, hu, hv):
    """Closest hit for each ray; rays whose ``best`` starts negative stay misses.

    ``ray`` is (6, n), structure-of-arrays; directions need not be unit
    length, ``t`` is measured in multiples of the direction. The loop over
    rays is innermost and branch-free so that it vectorizes.
    """
    n = ray.shape[1]
    ox = ray[0]
    oy = ray[1]
    oz = ray[2]
    dx = ray[3]
    dy = ray[4]
    dz = ray[5]
    for i in range(kind.shape[0]):
        if kind[i] == SPHERE:
            cx0 = geo[i, 0]
            cy0 = geo[i, 1]
            cz0 = geo[i, 2]
            r2 = geo[i, 3] * geo[i, 3]
            for k in range(n):
                cx = ox[k] - cx0
                cy = oy[k] - cy0
                cz = oz[k] - cz0
                b = cx * dx[k] + cy * dy[k] + cz * dz[k]
                c = cx * cx + cy * cy + cz * cz - r2
                a = dx[k] * dx[k] + dy[k] * dy[k] + dz[k] * dz[k]
                sq = math.sqrt(b * b - a * c)  # NaN on a miss fails the tests below
                t0 = (-b - sq) / a
                t1 = (-b + sq) / a
                t = t0 if t0 > 1e-9 else t1
                ok = (t > 1e-9) & (t < best[k])
                best[k] = t if ok else best[k]
                hit[k] = i if ok else hit[k]
        else:
            o0 = geo[i, 0]
            o1 = geo[i, 1]
            o2 = geo[i, 2]
            eu0 = geo[i, 3]
            eu1 = geo[i, 4]
            eu2 = geo[i, 5]
            ev0 = geo[i, 6]
            ev1 = geo[i, 7]
            ev2 = geo[i, 8]
            n0 = geo[i, 9]
            n1 = geo[i, 10]
            n2 = geo[i, 11]
            w0 = geo[i, 12]
            w1 = geo[i, 13]
            w2 = geo[i, 14]
            lim = 2.0 if kind[i] == QUAD else 1.0
            for k in range(n):
                qx = o0 - ox[k]
                qy = o1 - oy[k]
                qz = o2 - oz[k]
                t = (n0 * qx + n1 * qy + n2 * qz) / (n0 * dx[k] + n1 * dy[k] + n2 * dz[k])
                px = t * dx[k] - qx
                py = t * dy[k] - qy
                pz = t * dz[k] - qz
                u = w0 * (py * ev2 - pz * ev1) + w1 * (pz * ev0 - px * ev2) + w2 * (px * ev1 - py * ev0)
                v = w0 * (eu1 * pz - eu2 * py) + w1 * (eu2 * px - eu0 * pz) + w2 * (eu0 * py - eu1 * px)
                ok = ((t > 1e-9) & (t < best[k]) & (u >= 0.0) & (u <= 1.0) & (v >= 0.0)
                      & (v <= 1.0) & (u + v <= lim))
                best[k] = t if ok else best[k]
                hit[k] = i if ok else hit[k]
                hu[k] = u if ok else hu[k]
                hv[k] = v if ok else hv[k]


@njit(cache=True, error_model="numpy", fastmath=_FAST)
def trace_batch(kind, geo, prim_mat, alb, rough, spec, emis, em_prims, em_cdf, em_total, env,
                ray, keys, max_bounces, out):
    """Radiance arriving along each ray, counting at most `max_bounces` scatterings.

    ``ray`` is (6, n) origin+direction rows and is consumed; results go to
    ``out`` (n, 3). Diffuse vertices combine next-event estimation with
    emission found by the cosine-sampled continuation ray (MIS, power
    heuristic); glossy vertices rely on the continuation ray alone. The
    environment is only reached by escaping rays.

    All paths advance in lockstep so that the intersection and shadow tests
    run as vectorized loops over the whole batch.
    """
    n = ray.shape[1]
    thr = np.ones((n, 3))
    # solid-angle pdf of the cosine sample that produced each ray; < 0 means
    # camera or glossy ray, whose emission hits count in full
    cos_pdf = np.full(n, -1.0)
    alive = np.ones(n, dtype=np.bool_)
    best = np.empty(n)
    hit = np.empty(n, dtype=np.int64)
    hu = np.zeros(n)
    hv = np.zeros(n)
    shadow = np.empty((6, n))
    sbest = np.empty(n)
    shit = np.empty(n, dtype=np.int64)
    gain = np.zeros((n, 3))
    u_pick = np.empty(n)
    u_pt1 = np.empty(n)
    u_pt2 = np.empty(n)
    u_dir1 = np.empty(n)
    u_dir2 = np.empty(n)
    out[:, :] = 0.0
    for depth in range(max_bounces + 1):
        for k in range(n):
            best[k] = FAR if alive[k] else -1.0
            hit[k] = -1
        intersect_many(kind, geo, ray, best, hit, hu, hv)
        vertex = depth + 1
        if depth < max_bounces:
            # all of this vertex's uniforms up front, in a loop that vectorizes
            for k in range(n):
                u_pick[k] = draw(keys[k], vertex, 1)
                u_pt1[k], u_pt2[k] = draw2(keys[k], vertex, 2)
                u_dir1[k], u_dir2[k] = draw2(keys[k], vertex, 4)
        any_alive = False
        for k in range(n):
            sbest[k] = -1.0
            if not alive[k]:
                continue
            alive[k] = False
            h = hit[k]
            if h < 0:
                out[k, 0] += thr[k, 0] * env[0]
                out[k, 1] += thr[k, 1] * env[1]
                out[k, 2] += thr[k, 2] * env[2]
                continue
            m = prim_mat[h]
            dx = ray[3, k]
            dy = ray[4, k]
            dz = ray[5, k]
            t = best[k]
            px = ray[0, k] + t * dx
            py = ray[1, k] + t * dy
            pz = ray[2, k] + t * dz
            nx, ny, nz = normal_at(kind, geo, h, px, py, pz)
            cos_in = _dot(nx, ny, nz, dx, dy, dz)
            if emis[m, 0] + emis[m, 1] + emis[m, 2] > 0.0:
                ew = 1.0
                if cos_pdf[k] >= 0.0:
                    # emission weight of the cosine strategy: pc^2 / (pl^2 + pc^2), pl = t^2 / (|cos_in| em_total)
                    a = t * t
                    b = cos_pdf[k] * abs(cos_in) * em_total
                    ew = b * b / (a * a + b * b)
                out[k, 0] += thr[k, 0] * emis[m, 0] * ew
                out[k, 1] += thr[k, 1] * emis[m, 1] * ew
                out[k, 2] += thr[k, 2] * emis[m, 2] * ew
            if depth == max_bounces:
                continue
            key = keys[k]
            if cos_in > 0.0:
                nx = -nx
                ny = -ny
                nz = -nz
            ox = px + RAY_OFFSET * nx
            oy = py + RAY_OFFSET * ny
            oz = pz + RAY_OFFSET * nz
            thr[k, 0] *= alb[m, 0]
            thr[k, 1] *= alb[m, 1]
            thr[k, 2] *= alb[m, 2]
            # draw() is in [0, 1): skipping it for spec == 0 changes nothing
            if spec[m] <= 0.0 or draw(key, vertex, 0) >= spec[m]:
                qx, qy, qz, valid, er, eg, eb = light_sample(
                    kind, geo, prim_mat, emis, em_prims, em_cdf, em_total,
                    px, py, pz, nx, ny, nz, u_pick[k], u_pt1[k], u_pt2[k])
                # unnormalized direction o -> q, so the light sits at t = 1;
                # stop just short of it so it cannot shadow itself
                shadow[0, k] = ox
                shadow[1, k] = oy
                shadow[2, k] = oz
                shadow[3, k] = qx - ox
                shadow[4, k] = qy - oy
                shadow[5, k] = qz - oz
                sbest[k] = 1.0 - 1e-6 if valid > 0.0 else -1.0
                gain[k, 0] = thr[k, 0] * er
                gain[k, 1] = thr[k, 1] * eg
                gain[k, 2] = thr[k, 2] * eb
                dx, dy, dz = sample_cosine(nx, ny, nz, u_dir1[k], u_dir2[k])
                cos_pdf[k] = max(0.0, _dot(nx, ny, nz, dx, dy, dz)) * INV_PI
            else:
                c = _dot(nx, ny, nz, dx, dy, dz)
                rx = dx - 2.0 * c * nx
                ry = dy - 2.0 * c * ny
                rz = dz - 2.0 * c * nz
                cos_max = math.cos(rough[m] * 0.5 * math.pi)
                dx, dy, dz = sample_cone(rx, ry, rz, cos_max, u_dir1[k], u_dir2[k])
                cos_pdf[k] = -1.0
                if _dot(nx, ny, nz, dx, dy, dz) <= 0.0:
                    continue
            if thr[k, 0] == 0.0 and thr[k, 1] == 0.0 and thr[k, 2] == 0.0:
                continue
            ray[0, k] = ox
            ray[1, k] = oy
            ray[2, k] = oz
            ray[3, k] = dx
            ray[4, k] = dy
            ray[5, k] = dz
            alive[k] = True
            any_alive = True
        if depth < max_bounces:
            for k in range(n):
                shit[k] = -1
            intersect_many(kind, geo, shadow, sbest, shit, hu, hv)
            for k in range(n):
                # sbest < 0: no shadow ray; shit >= 0: blocked
                if sbest[k] > 0.0 and shit[k] < 0:
                    out[k, 0] += gain[k, 0]
                    out[k, 1] += gain[k, 1]
                    out[k, 2] += gain[k, 2]
        if not any_alive:
            break
    return out


@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def camera_ray(cam, x, y, width, height, jx, jy):
    # cam rows: origin, right * tan(fov/2) * aspect, up * tan(fov/2), forward
    sx = 2.0 * (x + jx) / width - 1.0
    sy = 1.0 - 2.0 * (y + jy) / height
    dx = cam[3, 0] + sx * cam[1, 0] + sy * cam[2, 0]
    dy = cam[3, 1] + sx * cam[1, 1] + sy * cam[2, 1]
    dz = cam[3, 2] + sx * cam[1, 2] + sy * cam[2, 2]
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    return cam[0, 0], cam[0, 1], cam[0, 2], dx / n, dy / n, dz / n


BATCH = 256


@njit(cache=True, parallel=True, error_model="numpy", fastmath=_FAST)
def render_path_traced(kind, geo, prim_mat, alb, rough, spec, emis, em_prims, em_cdf, em_total,
                       env, cam, width, height, spp, max_bounces, seed):
    out = np.zeros((height * width, 3))
    seed = np.uint64(seed)
    batch = min(spp, BATCH)
    for pix in prange(height * width):
        y = pix // width
        x = pix - y * width
        sr = 0.0
        sg = 0.0
        sb = 0.0
        for s0 in range(0, spp, batch):
            nb = min(batch, spp - s0)
            ray = np.empty((6, nb))
            keys = np.empty(nb, dtype=np.uint64)
            radiance = np.empty((nb, 3))
            for j in range(nb):
                key = stream_key(seed, pix, s0 + j)
                keys[j] = key
                u1, u2 = draw2(key, 0, 0)
                ox, oy, oz, dx, dy, dz = camera_ray(cam, x, y, width, height, u1, u2)
                ray[0, j] = ox
                ray[1, j] = oy
                ray[2, j] = oz
                ray[3, j] = dx
                ray[4, j] = dy
                ray[5, j] = dz
            trace_batch(kind, geo, prim_mat, alb, rough, spec, emis, em_prims, em_cdf, em_total,
                        env, ray, keys, max_bounces, radiance)
            for j in range(nb):
                sr += radiance[j, 0]
                sg += radiance[j, 1]
                sb += radiance[j, 2]
        out[pix, 0] = sr / spp
        out[pix, 1] = sg / spp
        out[pix, 2] = sb / spp
    return out.reshape((height, width, 3))


# ---------------------------------------------------------------------------
# lightmaps

@njit(cache=True, inline="always", error_model="numpy", fastmath=_FAST)
def lightmap_lookup(lm_off, lm_w, lm_h, lm_near, lm_irr, prim, u, v):
    w = lm_w[prim]
    h = lm_h[prim]
    col = min(max(int(u * w), 0), w - 1)
    row = min(max(int(v * h), 0), h - 1)
    t = lm_near[lm_off[prim] + row * w + col]
    return lm_irr[t, 0], lm_irr[t, 1], lm_irr[t, 2]


@njit(cache=True, error_model="numpy", fastmath=_FAST)
def shade_baked(kind, geo, prim_mat, alb, spec, emis, env, lm_off, lm_w, lm_h, lm_near, lm_irr,
                hit, t, u, v, ox, oy, oz, dx, dy, dz):
    """Emission plus lightmap-driven diffuse response at a hit point."""
    if hit < 0:
        return env[0], env[1], env[2]
    m = prim_mat[hit]
    r = emis[m, 0]
    g = emis[m, 1]
    b = emis[m, 2]
    if lm_off[hit] < 0:
        return r, g, b
    nx, ny, nz = normal_at(kind, geo, hit, ox + t * dx, oy + t * dy, oz + t * dz)
    if _dot(nx, ny, nz, dx, dy, dz) > 0.0:
        return r, g, b  # back face: lightmaps store the front side only
    ir, ig, ib = lightmap_lookup(lm_off, lm_w, lm_h, lm_near, lm_irr, hit, u, v)
    k = (1.0 - spec[m]) * INV_PI
    return r + k * alb[m, 0] * ir, g + k * alb[m, 1] * ig, b + k * alb[m, 2] * ib


@njit(cache=True, parallel=True, error_model="numpy", fastmath=_FAST)
def render_baked(kind, geo, prim_mat, alb, rough, spec, emis, env, cam, width, height, spp,
                 max_bounces, seed, lm_off, lm_w, lm_h, lm_near, lm_irr):
    out = np.zeros((height * width, 3))
    seed = np.uint64(seed)
    for pix in prange(height * width):
        y = pix // width
        x = pix - y * width
        sr = 0.0
        sg = 0.0
        sb = 0.0
        for s in range(spp):
            key = stream_key(seed, pix, s)
            u1, u2 = draw2(key, 0, 0)
            ox, oy, oz, dx, dy, dz = camera_ray(cam, x, y, width, height, u1, u2)
            t, hit, u, v = intersect(kind, geo, ox, oy, oz, dx, dy, dz, FAR)
            if hit < 0:
                sr += env[0]
                sg += env[1]
                sb += env[2]
                continue
            m = prim_mat[hit]
            if max_bounces == 0:
                sr += emis[m, 0]
                sg += emis[m, 1]
                sb += emis[m, 2]
                continue
            r, g, b = shade_baked(kind, geo, prim_mat, alb, spec, emis, env, lm_off, lm_w, lm_h,
                                  lm_near, lm_irr, hit, t, u, v, ox, oy, oz, dx, dy, dz)
            if spec[m] > 0.0:
                # glossy lobe stays dynamic: one reflection ray, shaded from the lightmaps
                px = ox + t * dx
                py = oy + t * dy
                pz = oz + t * dz
                nx, ny, nz = normal_at(kind, geo, hit, px, py, pz)
                if _dot(nx, ny, nz, dx, dy, dz) > 0.0:
                    nx = -nx
                    ny = -ny
                    nz = -nz
                c = _dot(nx, ny, nz, dx, dy, dz)
                rx = dx - 2.0 * c * nx
                ry = dy - 2.0 * c * ny
                rz = dz - 2.0 * c * nz
                cos_max = math.cos(rough[m] * 0.5 * math.pi)
                u1, u2 = draw2(key, 1, 4)
                qx, qy, qz = sample_cone(rx, ry, rz, cos_max, u1, u2)
                if _dot(nx, ny, nz, qx, qy, qz) > 0.0:
                    px += RAY_OFFSET * nx
                    py += RAY_OFFSET * ny
                    pz += RAY_OFFSET * nz
                    t2, hit2, u2, v2 = intersect(kind, geo, px, py, pz, qx, qy, qz, FAR)
                    r2, g2, b2 = shade_baked(kind, geo, prim_mat, alb, spec, emis, env, lm_off,
                                             lm_w, lm_h, lm_near, lm_irr, hit2, t2, u2, v2,
                                             px, py, pz, qx, qy, qz)
                    w = spec[m]
                    r += w * alb[m, 0] * r2
                    g += w * alb[m, 1] * g2
                    b += w * alb[m, 2] * b2
            sr += r
            sg += g
            sb += b
        out[pix, 0] = sr / spp
        out[pix, 1] = sg / spp
        out[pix, 2] = sb / spp
    return out.reshape((height, width, 3))


@njit(cache=True, parallel=True, error_model="numpy", fastmath=_FAST)
def bake_texels(kind, geo, prim_mat, alb, rough, spec, emis, em_prims, em_cdf, em_total, env,
                tex_prim, tex_col, tex_row, tex_w, tex_h, samples, max_bounces, seed):
    """Irradiance on the front side of each texel, averaged over the texel area."""
    n = tex_prim.shape[0]
    out = np.zeros((n, 3))
    seed = np.uint64(seed)
    batch = min(samples, BATCH)
    for k in prange(n):
        i = tex_prim[k]
        nx = geo[i, 15]
        ny = geo[i, 16]
        nz = geo[i, 17]
        sr = 0.0
        sg = 0.0
        sb = 0.0
        for s0 in range(0, samples, batch):
            nb = min(batch, samples - s0)
            ray = np.empty((6, nb))
            keys = np.empty(nb, dtype=np.uint64)
            radiance = np.empty((nb, 3))
            for j in range(nb):
                key = stream_key(seed, k, s0 + j)
                keys[j] = key
                ju, jv = draw2(key, 0, 0)
                u = (tex_col[k] + ju) / tex_w[k]
                v = (tex_row[k] + jv) / tex_h[k]
                if kind[i] == TRIANGLE and u + v > 1.0:
                    # pull stray jitter back onto the hypotenuse
                    scale = (1.0 - 1e-6) / (u + v)
                    u *= scale
                    v *= scale
                ray[0, j] = geo[i, 0] + u * geo[i, 3] + v * geo[i, 6] + RAY_OFFSET * nx
                ray[1, j] = geo[i, 1] + u * geo[i, 4] + v * geo[i, 7] + RAY_OFFSET * ny
                ray[2, j] = geo[i, 2] + u * geo[i, 5] + v * geo[i, 8] + RAY_OFFSET * nz
                u1, u2 = draw2(key, 0, 2)
                dx, dy, dz = sample_cosine(nx, ny, nz, u1, u2)
                ray[3, j] = dx
                ray[4, j] = dy
                ray[5, j] = dz
            trace_batch(kind, geo, prim_mat, alb, rough, spec, emis, em_prims, em_cdf, em_total,
                        env, ray, keys, max_bounces, radiance)
            for j in range(nb):
                sr += radiance[j, 0]
                sg += radiance[j, 1]
                sb += radiance[j, 2]
        # cosine-weighted sampling: irradiance = pi * mean incident radiance
        out[k, 0] = math.pi * sr / samples
        out[k, 1] = math.pi * sg / samples
        out[k, 2] = math.pi * sb / samples
    return out
