"""Spherical-harmonics color and tile-based front-to-back compositing.

Two compositor kernels produce bit-identical framebuffers: a naive
per-pixel reference loop, and the production loop restructured as a
three-stage software pipeline over the sorted pair list (fetch the pair
index for step i+2, fetch the splat payload for step i+1, composite step
i). Restructuring touches only the fetch schedule, never the per-pixel
arithmetic order, so equality is exact, not approximate.

Per pixel: alpha = min(0.99, opacity * exp(-q/2)) with q the conic
quadratic form; a pair is skipped when the pixel falls outside the
splat's tight extent rectangle, when q exceeds the power cutoff, or when
alpha falls under tau; otherwise C += color * alpha * T and
T *= (1 - alpha); the pixel stops once T < 1e-4; finally
C += T * background. Everything is float32.

The extent-rectangle and cutoff skips mirror the binning-side sizing rule
exactly, which is what makes every strategy's output bit-identical: pairs
one strategy emits and another does not are, by construction, skipped at
every pixel. The rectangle test is a pair of exact float32 comparisons,
so it is immune to the rounding of the quadratic form even for extremely
anisotropic splats.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from .constants import TILE_SIZE

# Splat payload row layout (float32): the renderer's whole per-Gaussian state.
SPLAT_CX, SPLAT_CY = 0, 1
SPLAT_A, SPLAT_B, SPLAT_C = 2, 3, 4
SPLAT_OPACITY, SPLAT_CUTOFF = 5, 6
SPLAT_R, SPLAT_G, SPLAT_B_COL = 7, 8, 9
SPLAT_HX, SPLAT_HY = 10, 11
SPLAT_COLS = 12

# Real spherical-harmonics basis constants (degree <= 3), reference convention.
SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
         -1.0925484305920792, 0.5462742152960396)
SH_C3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
         0.3731763325901154, -0.4570457994644658, 1.445305721320277,
         -0.5900435899266435)


def eval_sh_color(degree, sh, view_dir):
    """Evaluate SH colors: basis up to ``degree`` dotted with coefficients.

    ``sh`` is (N, 16, 3), ``view_dir`` (N, 3) unit vectors. A 0.5 offset is
    added and the result clamped below at zero. float32 throughout.
    """
    if not 0 <= degree <= 3:
        raise ValueError("SH degree must be in 0..3")
    sh = np.asarray(sh, dtype=np.float32).reshape(-1, 16, 3)
    d = np.asarray(view_dir, dtype=np.float32).reshape(-1, 3)
    x, y, z = d[:, 0:1], d[:, 1:2], d[:, 2:3]
    f = np.float32
    res = f(SH_C0) * sh[:, 0]
    if degree >= 1:
        res = res - f(SH_C1) * y * sh[:, 1] + f(SH_C1) * z * sh[:, 2] \
            - f(SH_C1) * x * sh[:, 3]
    if degree >= 2:
        xx, yy, zz = x * x, y * y, z * z
        xy, yz, xz = x * y, y * z, x * z
        res = (res
               + f(SH_C2[0]) * xy * sh[:, 4]
               + f(SH_C2[1]) * yz * sh[:, 5]
               + f(SH_C2[2]) * (f(2.0) * zz - xx - yy) * sh[:, 6]
               + f(SH_C2[3]) * xz * sh[:, 7]
               + f(SH_C2[4]) * (xx - yy) * sh[:, 8])
    if degree >= 3:
        res = (res
               + f(SH_C3[0]) * y * (f(3.0) * xx - yy) * sh[:, 9]
               + f(SH_C3[1]) * xy * z * sh[:, 10]
               + f(SH_C3[2]) * y * (f(4.0) * zz - xx - yy) * sh[:, 11]
               + f(SH_C3[3]) * z * (f(2.0) * zz - f(3.0) * xx - f(3.0) * yy) * sh[:, 12]
               + f(SH_C3[4]) * x * (f(4.0) * zz - xx - yy) * sh[:, 13]
               + f(SH_C3[5]) * z * (xx - yy) * sh[:, 14]
               + f(SH_C3[6]) * x * (xx - f(3.0) * yy) * sh[:, 15])
    return np.maximum(res + f(0.5), f(0.0))


@njit(cache=True, nogil=True)
def _composite_naive(splat, values, start, end, ox, oy, ix, iy, tw, th,
                     tau, bg, img, contrib):
    """Reference per-pixel sequential loop; the oracle the pipeline must match."""
    half = np.float32(0.5)
    one = np.float32(1.0)
    zero = np.float32(0.0)
    cap = np.float32(0.99)
    stop = np.float32(1e-4)
    for py in range(th):
        fy = np.float32(oy + py) + half
        for px in range(tw):
            fx = np.float32(ox + px) + half
            T = one
            cr = zero
            cg = zero
            cb = zero
            for i in range(start, end):
                g = values[i]
                dx = fx - splat[g, 0]
                dy = fy - splat[g, 1]
                if dx > splat[g, 10] or -dx > splat[g, 10] \
                        or dy > splat[g, 11] or -dy > splat[g, 11]:
                    continue
                s = half * (splat[g, 2] * dx * dx + splat[g, 4] * dy * dy) \
                    + splat[g, 3] * dx * dy
                if s > half * splat[g, 6]:
                    continue
                al = splat[g, 5] * np.exp(-s)
                if al > cap:
                    al = cap
                if al < tau:
                    continue
                w = al * T
                cr = cr + splat[g, 7] * w
                cg = cg + splat[g, 8] * w
                cb = cb + splat[g, 9] * w
                contrib[i] = 1
                T = T * (one - al)
                if T < stop:
                    break
            img[iy + py, ix + px, 0] = cr + T * bg[0]
            img[iy + py, ix + px, 1] = cg + T * bg[1]
            img[iy + py, ix + px, 2] = cb + T * bg[2]


@njit(cache=True, nogil=True)
def _composite_pipelined(splat, values, start, end, ox, oy, ix, iy, tw, th,
                         tau, bg, img, contrib):
    """Production loop: three-stage fetch pipeline over the pair list."""
    half = np.float32(0.5)
    one = np.float32(1.0)
    zero = np.float32(0.0)
    cap = np.float32(0.99)
    stop = np.float32(1e-4)
    npx = tw * th
    T = np.empty(npx, dtype=np.float32)
    CR = np.empty(npx, dtype=np.float32)
    CG = np.empty(npx, dtype=np.float32)
    CB = np.empty(npx, dtype=np.float32)
    for p in range(npx):
        T[p] = one
        CR[p] = zero
        CG[p] = zero
        CB[p] = zero
    alive = npx
    n = end - start
    # stage registers: payload for step i (fetched at i-1), index for i+1
    cx = cy = a = b = c = op = k = colr = colg = colb = hx = hy = zero
    cx_n = cy_n = a_n = b_n = c_n = op_n = k_n = zero
    colr_n = colg_n = colb_n = hx_n = hy_n = zero
    idx_next = np.uint32(0)
    if n > 0:
        g0 = values[start]
        cx = splat[g0, 0]
        cy = splat[g0, 1]
        a = splat[g0, 2]
        b = splat[g0, 3]
        c = splat[g0, 4]
        op = splat[g0, 5]
        k = splat[g0, 6]
        colr = splat[g0, 7]
        colg = splat[g0, 8]
        colb = splat[g0, 9]
        hx = splat[g0, 10]
        hy = splat[g0, 11]
        if n > 1:
            idx_next = values[start + 1]
    i = 0
    while i < n and alive > 0:
        # fetch the pair index two steps ahead
        idx_next2 = np.uint32(0)
        if i + 2 < n:
            idx_next2 = values[start + i + 2]
        # fetch the splat payload one step ahead
        if i + 1 < n:
            g = idx_next
            cx_n = splat[g, 0]
            cy_n = splat[g, 1]
            a_n = splat[g, 2]
            b_n = splat[g, 3]
            c_n = splat[g, 4]
            op_n = splat[g, 5]
            k_n = splat[g, 6]
            colr_n = splat[g, 7]
            colg_n = splat[g, 8]
            colb_n = splat[g, 9]
            hx_n = splat[g, 10]
            hy_n = splat[g, 11]
        # composite the current step across the tile's live pixels
        hk = half * k
        touched = False
        for p in range(npx):
            Tp = T[p]
            if Tp < stop:
                continue
            py = p // tw
            px = p - py * tw
            fy = np.float32(oy + py) + half
            fx = np.float32(ox + px) + half
            dx = fx - cx
            dy = fy - cy
            if dx > hx or -dx > hx or dy > hy or -dy > hy:
                continue
            s = half * (a * dx * dx + c * dy * dy) + b * dx * dy
            if s > hk:
                continue
            al = op * np.exp(-s)
            if al > cap:
                al = cap
            if al < tau:
                continue
            w = al * Tp
            CR[p] = CR[p] + colr * w
            CG[p] = CG[p] + colg * w
            CB[p] = CB[p] + colb * w
            touched = True
            Tp = Tp * (one - al)
            T[p] = Tp
            if Tp < stop:
                alive -= 1
        if touched:
            contrib[start + i] = 1
        # rotate the pipeline stages
        cx = cx_n
        cy = cy_n
        a = a_n
        b = b_n
        c = c_n
        op = op_n
        k = k_n
        colr = colr_n
        colg = colg_n
        colb = colb_n
        hx = hx_n
        hy = hy_n
        idx_next = idx_next2
        i += 1
    for p in range(npx):
        py = p // tw
        px = p - py * tw
        img[iy + py, ix + px, 0] = CR[p] + T[p] * bg[0]
        img[iy + py, ix + px, 1] = CG[p] + T[p] * bg[1]
        img[iy + py, ix + px, 2] = CB[p] + T[p] * bg[2]


def render_tile(splat, values, start, end, tile_x, tile_y, width, height,
                background, tau, img, contrib, pipelined=True):
    """Composite one tile's sorted pair slice into ``img`` (in place).

    Returns the number of pairs in the slice that contributed to at least
    one pixel of this tile.
    """
    x0 = tile_x * TILE_SIZE
    y0 = tile_y * TILE_SIZE
    tw = min(TILE_SIZE, width - x0)
    th = min(TILE_SIZE, height - y0)
    bg = np.asarray(background, dtype=np.float32).reshape(3)
    kernel = _composite_pipelined if pipelined else _composite_naive
    kernel(splat, values, int(start), int(end), x0, y0, x0, y0, tw, th,
           np.float32(tau), bg, img, contrib)
    return int(contrib[start:end].sum())


def render_frame(splat, sorted_values, starts, width, height, background,
                 tau, workers=1, pipelined=True):
    """Render every tile independently from the sorted pair ranges.

    Returns (image (H, W, 3) float32, contrib flags per pair, nonempty tile
    count). Deterministic for any worker count: tiles write disjoint
    regions and the flags are per-pair.
    """
    grid_w = -(-width // TILE_SIZE)
    bg = np.asarray(background, dtype=np.float32).reshape(3)
    img = np.empty((height, width, 3), dtype=np.float32)
    img[:] = bg
    contrib = np.zeros(sorted_values.shape[0], dtype=np.uint8)
    nonempty = np.nonzero(np.diff(starts) > 0)[0]
    if nonempty.size == 0:
        return img, contrib, 0

    kernel = _composite_pipelined if pipelined else _composite_naive
    tau32 = np.float32(tau)

    def run_block(block):
        for t in block:
            ty, tx = divmod(int(t), grid_w)
            x0 = tx * TILE_SIZE
            y0 = ty * TILE_SIZE
            tw = min(TILE_SIZE, width - x0)
            th = min(TILE_SIZE, height - y0)
            kernel(splat, sorted_values, int(starts[t]), int(starts[t + 1]),
                   x0, y0, x0, y0, tw, th, tau32, bg, img, contrib)

    blocks = [nonempty[i:i + 8] for i in range(0, nonempty.size, 8)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, blocks))
    else:
        for block in blocks:
            run_block(block)
    return img, contrib, int(nonempty.size)
