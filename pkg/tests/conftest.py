"""Shared fixtures and scene-construction helpers."""

import numpy as np
import pytest

import tilesplat as ts


def make_raw_scene(means, scales, opacities, quats=None, dc=None, rest=None):
    """Build a raw Scene from activated-target values (inverts activations).

    Opacity 0.5 maps to logit 0 exactly; other targets land within float32
    of the request.
    """
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    n = means.shape[0]
    scales = np.broadcast_to(np.asarray(scales, dtype=np.float64), (n, 3))
    opacities = np.broadcast_to(np.asarray(opacities, dtype=np.float64), (n,))
    if quats is None:
        quats = np.tile(np.array([1.0, 0, 0, 0]), (n, 1))
    quats = np.broadcast_to(np.asarray(quats, dtype=np.float64), (n, 4))
    sh = np.zeros((n, 16, 3), dtype=np.float32)
    if dc is None:
        dc = np.tile(np.array([0.8, 0.8, 0.8]), (n, 1))
    sh[:, 0, :] = np.broadcast_to(np.asarray(dc, dtype=np.float64), (n, 3))
    if rest is not None:
        sh[:, 1:, :] = rest
    return ts.Scene(
        means=means.astype(np.float32),
        normals=np.zeros((n, 3), dtype=np.float32),
        sh=sh,
        logit_opacities=np.log(opacities / (1.0 - opacities)).astype(np.float32),
        log_scales=np.log(scales).astype(np.float32),
        rotations=quats.astype(np.float32),
    )


def identity_camera(width=64, height=64, focal=None, position=(0.0, 0.0, 0.0)):
    """Camera at ``position`` looking down +z with identity rotation."""
    focal = focal if focal is not None else width / 2
    return ts.make_camera(width, height, position, np.eye(3), focal, focal)


def splat_row(cx, cy, conic=(1.0, 0.0, 1.0), opacity=0.5, cutoff=9.0,
              color=(1.0, 1.0, 1.0), extent=(1e6, 1e6)):
    """One renderer payload row (see render.SPLAT_* layout).

    ``extent`` defaults to effectively unbounded so tests that only care
    about the conic/cutoff rule are unaffected by the clamp rectangle.
    """
    return np.array([cx, cy, conic[0], conic[1], conic[2], opacity, cutoff,
                     color[0], color[1], color[2], extent[0], extent[1]],
                    dtype=np.float32)


def reference_composite(splat, values, tile_origin, tw, th, background, tau):
    """Independent numpy float32 compositor used as a semantic oracle.

    Mirrors the documented per-pixel rule (cutoff skip, alpha skip, cap,
    early stop) without sharing code with the numba kernels.
    """
    f = np.float32
    bg = np.asarray(background, dtype=np.float32)
    ox, oy = tile_origin
    img = np.zeros((th, tw, 3), dtype=np.float32)
    contrib = np.zeros(len(values), dtype=bool)
    for py in range(th):
        for px in range(tw):
            T = f(1.0)
            c = np.zeros(3, dtype=np.float32)
            for i, g in enumerate(values):
                row = splat[g]
                dx = f(ox + px) + f(0.5) - row[0]
                dy = f(oy + py) + f(0.5) - row[1]
                if dx > row[10] or -dx > row[10] or dy > row[11] or -dy > row[11]:
                    continue
                s = f(0.5) * (row[2] * dx * dx + row[4] * dy * dy) + row[3] * dx * dy
                if s > f(0.5) * row[6]:
                    continue
                al = row[5] * np.exp(-s)
                if al > f(0.99):
                    al = f(0.99)
                if al < f(tau):
                    continue
                w = al * T
                c = c + row[7:10] * w
                contrib[i] = True
                T = T * (f(1.0) - al)
                if T < f(1e-4):
                    break
            img[py, px] = c + T * bg
    return img, contrib


def visible_tile_set(bin_out, camera, tau):
    """Exhaustive per-pixel visibility oracle: the set of (tile, gaussian)
    pairs some pixel center of which satisfies the pipeline visibility rule
    (q <= cutoff and alpha >= tau). Vectorized over the full screen per
    retained gaussian; independent of the binning tile walk."""
    f = np.float32
    w, h = camera.width, camera.height
    gw, gh = bin_out.grid_w, bin_out.grid_h
    xs = (np.arange(w, dtype=np.float32) + f(0.5))[None, :]
    ys = (np.arange(h, dtype=np.float32) + f(0.5))[:, None]
    required = set()
    pad_x, pad_y = gw * 16 - w, gh * 16 - h
    for g in np.nonzero(bin_out.retained)[0]:
        row = bin_out.splat[g]
        dx = xs - row[0]
        dy = ys - row[1]
        in_rect = (np.abs(dx) <= row[10]) & (np.abs(dy) <= row[11])
        s = f(0.5) * (row[2] * dx * dx + row[4] * dy * dy) + row[3] * (dx * dy)
        alpha = np.minimum(row[5] * np.exp(-s), f(0.99))
        vis = in_rect & (s <= f(0.5) * row[6]) & (alpha >= f(tau))
        if not vis.any():
            continue
        vis = np.pad(vis, ((0, pad_y), (0, pad_x)))
        tiles = vis.reshape(gh, 16, gw, 16).any(axis=(1, 3))
        for ty, tx in zip(*np.nonzero(tiles)):
            required.add((int(ty) * gw + int(tx), int(g)))
    return required


def pair_set(bin_out):
    tiles, _ = ts.decode_keys(bin_out.keys)
    return set(zip(tiles.tolist(), bin_out.values.astype(int).tolist()))


def random_tile_case(rng, n_pairs, n_splats=64):
    """Random splat payload rows plus a sorted-range stand-in for one tile."""
    from tilesplat.render import SPLAT_COLS

    splat = np.zeros((n_splats, SPLAT_COLS), dtype=np.float32)
    splat[:, 0] = rng.uniform(-10, 26, n_splats)
    splat[:, 1] = rng.uniform(-10, 26, n_splats)
    s1 = rng.uniform(0.8, 8.0, n_splats)
    s2 = rng.uniform(0.8, 8.0, n_splats)
    th = rng.uniform(0, np.pi, n_splats)
    ct, st_ = np.cos(th), np.sin(th)
    a_cov = ct * ct * s1 * s1 + st_ * st_ * s2 * s2
    c_cov = st_ * st_ * s1 * s1 + ct * ct * s2 * s2
    b_cov = ct * st_ * (s1 * s1 - s2 * s2)
    conic, _, _ = ts.conic_from_cov2d(
        np.stack([a_cov, b_cov, c_cov], axis=1).astype(np.float32))
    splat[:, 2:5] = conic
    splat[:, 5] = rng.uniform(0.02, 0.995, n_splats)
    k, _ = ts.power_cutoffs(splat[:, 5])
    splat[:, 6] = k
    splat[:, 7:10] = rng.uniform(0, 1, (n_splats, 3))
    splat[:, 10] = np.sqrt(k * a_cov.astype(np.float32))
    splat[:, 11] = np.sqrt(k * c_cov.astype(np.float32))
    values = rng.integers(0, n_splats, n_pairs).astype(np.uint32)
    return splat, values


@pytest.fixture(scope="session")
def mixed_scene():
    return ts.gen_synthetic("mixed", 800, 11)


@pytest.fixture(scope="session")
def elongated_scene():
    return ts.gen_synthetic("elongated", 800, 5)


@pytest.fixture(scope="session")
def orbit3():
    return ts.orbit_cameras(3, 24.0, 256, 192)
