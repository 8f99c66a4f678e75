"""Fused preprocessing and key-value binning.

One pass per Gaussian: cull, project, build the conic, size the extent,
pick candidate tiles by strategy, evaluate the SH color, and emit one
(key, index) pair per accepted tile. Keys are 64-bit: high half the
linear tile index, low half the IEEE-754 bits of the camera depth, so
unsigned key order is (tile, front-to-back depth) order.

Strategies:

- ``baseline-circle-aabb``: square box of the enclosing circle
  (radius ceil(3*sqrt(lam1))), every tile in the box emitted; two-pass
  count + exclusive-prefix-sum emission like the reference pipeline.
- ``tight-aabb``: exact rectangle of the opacity-aware cutoff ellipse,
  every tile in it emitted.
- ``precise``: tight rectangle as the coarse filter, then the exact
  chord-overlap test per candidate tile.

The fused (tight/precise) arm emits through a shared-cursor pair buffer:
tasks reserve index ranges and copy their block in, so the array order is
scheduling-dependent but the multiset is not; sorting normalizes it.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import extent, projection
from .constants import CUTOFF_SLACK, TAU_DEFAULT, TILE_SIZE
from .intersect import tiles_intersect_ellipse
from .model_io import ActivatedScene, Scene, activate
from .render import SPLAT_COLS, eval_sh_color

STRATEGIES = ("baseline-circle-aabb", "tight-aabb", "precise")

# Multi-tile Gaussians are processed in fixed-size tile chunks; ellipses
# seldom cover more than this many tiles, so most produce one chunk.
BATCH_CHUNK = 32

_f32 = np.float32


def encode_keys(tile_indices, depths) -> np.ndarray:
    """Pack (tile, depth) into sortable 64-bit keys."""
    depths = np.ascontiguousarray(depths, dtype=np.float32)
    if depths.size and (not np.all(np.isfinite(depths)) or np.any(depths <= 0)):
        raise ValueError("depths must be positive and finite (cull failed upstream)")
    tiles = np.asarray(tile_indices, dtype=np.uint64)
    bits = depths.view(np.uint32).astype(np.uint64)
    return (tiles << np.uint64(32)) | bits


def decode_keys(keys):
    """Inverse of :func:`encode_keys`: (tile indices, float32 depths)."""
    keys = np.asarray(keys, dtype=np.uint64)
    tiles = (keys >> np.uint64(32)).astype(np.int64)
    depths = (keys & np.uint64(0xFFFFFFFF)).astype(np.uint32).view(np.float32)
    return tiles, depths


def encode_key(tile_index: int, depth: float) -> int:
    return int(encode_keys(np.asarray([tile_index]), np.asarray([depth]))[0])


def decode_key(key: int):
    tiles, depths = decode_keys(np.asarray([key]))
    return int(tiles[0]), float(depths[0])


@dataclass
class WorkSchedule:
    """Size-aware split of the per-Gaussian tile work.

    Single-tile Gaussians are handled inline by the worker that projected
    them; multi-tile ones land in a shared batch whose row-major tile
    enumeration is cut into fixed chunks. The schedule never changes the
    emitted pair multiset, only who computes it.
    """

    inline_ids: np.ndarray   # Gaussian indices with exactly one candidate tile
    batch: np.ndarray        # (M, 3) int64 rows (gaussian, lo, hi) tile slices
    chunk: int


def partition_work(tile_rects, active, chunk=BATCH_CHUNK) -> WorkSchedule:
    """Build the work schedule from inclusive tile rectangles."""
    rects = np.asarray(tile_rects, dtype=np.int64).reshape(-1, 4)
    active = np.asarray(active, dtype=bool)
    nx = rects[:, 2] - rects[:, 0] + 1
    ny = rects[:, 3] - rects[:, 1] + 1
    counts = np.where(active, nx * ny, 0)
    inline_ids = np.nonzero(counts == 1)[0]
    multi = np.nonzero(counts > 1)[0]
    if multi.size == 0:
        batch = np.empty((0, 3), dtype=np.int64)
        return WorkSchedule(inline_ids, batch, chunk)
    mcounts = counts[multi]
    nchunks = -(-mcounts // chunk)
    total = int(nchunks.sum())
    rep = np.repeat(np.arange(multi.size), nchunks)
    starts = np.repeat(np.cumsum(nchunks) - nchunks, nchunks)
    within = np.arange(total) - starts
    lo = within * chunk
    hi = np.minimum(lo + chunk, mcounts[rep])
    batch = np.stack([multi[rep], lo, hi], axis=1).astype(np.int64)
    return WorkSchedule(inline_ids, batch, chunk)


class PairBuffer:
    """Preallocated (key, value) arrays fed through a shared cursor.

    ``append`` reserves a range and copies the block under one lock; if the
    reservation overflows, the arrays grow (never silently truncate) and
    the regrow is counted for the frame stats.
    """

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.keys = np.empty(self.capacity, dtype=np.uint64)
        self.values = np.empty(self.capacity, dtype=np.uint32)
        self.cursor = 0
        self.regrows = 0
        self._lock = threading.Lock()

    def append(self, keys: np.ndarray, values: np.ndarray) -> None:
        m = keys.shape[0]
        if m == 0:
            return
        with self._lock:
            need = self.cursor + m
            if need > self.capacity:
                new_cap = max(need, int(self.capacity * 1.5) + 16)
                nk = np.empty(new_cap, dtype=np.uint64)
                nv = np.empty(new_cap, dtype=np.uint32)
                nk[:self.cursor] = self.keys[:self.cursor]
                nv[:self.cursor] = self.values[:self.cursor]
                self.keys, self.values = nk, nv
                self.capacity = new_cap
                self.regrows += 1
            start = self.cursor
            self.cursor = need
            self.keys[start:need] = keys
            self.values[start:need] = values


@dataclass
class BinOutput:
    """Per-frame splat table plus the unsorted pair arrays and counters."""

    splat: np.ndarray          # (P, 10) float32 renderer payload rows
    depth: np.ndarray          # (P,) float32 camera-space z
    retained: np.ndarray       # (P,) bool
    tile_rects: np.ndarray     # (P, 4) int32 inclusive candidate tile rects
    tile_counts: np.ndarray    # (P,) int64 candidate tile counts
    keys: np.ndarray           # (M,) uint64
    values: np.ndarray         # (M,) uint32
    emitted_count: int
    gaussians_retained: int
    gaussians_degenerate: int
    buffer_regrows: int
    capacity: int
    grid_w: int
    grid_h: int
    strategy: str
    tau: float

    @property
    def pair_buffer_bytes(self) -> int:
        return self.emitted_count * (8 + 4)


def _candidate_rects(proj, act, strategy, tau):
    """Strategy extent rectangles, cutoffs, and conservative test cutoffs."""
    k, keep = extent.power_cutoffs(act.opacities, tau)
    retained = proj.retained & keep
    # tight half-extents double as the renderer's per-splat clamp rectangle
    hx = np.sqrt(np.maximum(k * proj.cov2d[:, 0], _f32(0)))
    hy = np.sqrt(np.maximum(k * proj.cov2d[:, 2], _f32(0)))
    if strategy == "baseline-circle-aabb":
        xmin, ymin, xmax, ymax = extent.baseline_aabb(proj.pixel_center, proj.lam1)
    else:
        xmin, ymin, xmax, ymax = extent.tight_aabb(proj.pixel_center, proj.cov2d, k)
    # conservative cutoff for the exact test: covers the float32 rounding
    # of the renderer's quadratic form over the candidate region
    ex = hx + _f32(TILE_SIZE)
    ey = hy + _f32(TILE_SIZE)
    a, b, c = proj.conic[:, 0], proj.conic[:, 1], proj.conic[:, 2]
    term_scale = a * ex * ex + _f32(2.0) * np.abs(b) * ex * ey + c * ey * ey
    k_eff = k + _f32(CUTOFF_SLACK) * term_scale
    return k, k_eff, (hx, hy), retained, (xmin, ymin, xmax, ymax)


def preprocess_and_bin(scene, camera, strategy="precise", tau=TAU_DEFAULT,
                       workers=1, sh_degree=3, chunk_size=32768,
                       initial_capacity=None) -> BinOutput:
    """Project, cull, size, test, color, and emit pairs for one camera."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    act = activate(scene) if isinstance(scene, Scene) else scene
    assert isinstance(act, ActivatedScene)
    p = act.count
    grid_w, grid_h = camera.grid

    splat = np.zeros((p, SPLAT_COLS), dtype=np.float32)
    depth = np.zeros(p, dtype=np.float32)
    k_eff_all = np.zeros(p, dtype=np.float32)
    retained = np.zeros(p, dtype=bool)
    degenerate = np.zeros(p, dtype=bool)
    rects = np.zeros((p, 4), dtype=np.int32)

    chunks = [(lo, min(lo + chunk_size, p)) for lo in range(0, p, chunk_size)]

    def phase_a(bounds):
        lo, hi = bounds
        sub = ActivatedScene(
            means=act.means[lo:hi], opacities=act.opacities[lo:hi],
            scales=act.scales[lo:hi], rotations=act.rotations[lo:hi],
            sh=act.sh[lo:hi])
        proj = projection.project_gaussians(sub, camera, tau)
        k, k_eff, halves, keep, rect_px = _candidate_rects(proj, sub, strategy, tau)
        tx0, ty0, tx1, ty1, nonempty = extent.tile_ranges(
            rect_px[0], rect_px[1], rect_px[2], rect_px[3], grid_w, grid_h)
        keep = keep & nonempty
        idx = np.nonzero(keep)[0]
        if idx.size:
            d = sub.means[idx] - camera.position.astype(np.float32)
            nrm = np.sqrt(np.sum(d * d, axis=1, dtype=np.float32))
            nrm = np.where(nrm > 0, nrm, _f32(1.0))
            colors = eval_sh_color(sh_degree, sub.sh[idx], d / nrm[:, None])
            rows = lo + idx
            splat[rows, 0:2] = proj.pixel_center[idx]
            splat[rows, 2:5] = proj.conic[idx]
            splat[rows, 5] = sub.opacities[idx]
            splat[rows, 6] = k[idx]
            splat[rows, 7:10] = colors
            splat[rows, 10] = halves[0][idx]
            splat[rows, 11] = halves[1][idx]
            k_eff_all[rows] = k_eff[idx]
        depth[lo:hi] = proj.depth
        retained[lo:hi] = keep
        degenerate[lo:hi] = proj.degenerate
        rects[lo:hi, 0] = tx0
        rects[lo:hi, 1] = ty0
        rects[lo:hi, 2] = tx1
        rects[lo:hi, 3] = ty1

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 and len(chunks) > 1 else None
    try:
        if pool is None:
            for bounds in chunks:
                phase_a(bounds)
        else:
            list(pool.map(phase_a, chunks))

        nx = rects[:, 2] - rects[:, 0] + 1
        ny = rects[:, 3] - rects[:, 1] + 1
        counts = np.where(retained, (nx * ny).astype(np.int64), 0)
        width, height = camera.width, camera.height

        def expand(gids, los, his):
            """Row-major (gaussian, tile) candidates for slices of tile rects."""
            sizes = his - los
            total = int(sizes.sum())
            if total == 0:
                return (np.empty(0, dtype=np.int64),) * 3
            rep = np.repeat(np.arange(gids.size), sizes)
            offs = np.arange(total) - np.repeat(np.cumsum(sizes) - sizes, sizes)
            g = gids[rep]
            t = los[rep] + offs
            w = nx[g].astype(np.int64)
            ty = rects[g, 1] + t // w
            tx = rects[g, 0] + t % w
            return g, tx, ty

        def precise_mask(g, tx, ty):
            x0 = (tx * TILE_SIZE).astype(np.float64)
            y0 = (ty * TILE_SIZE).astype(np.float64)
            x1 = np.minimum(x0 + TILE_SIZE, width)
            y1 = np.minimum(y0 + TILE_SIZE, height)
            return np.asarray(tiles_intersect_ellipse(
                x0, y0, x1, y1,
                splat[g, 0], splat[g, 1],
                splat[g, 2], splat[g, 3], splat[g, 4],
                k_eff_all[g]))

        if strategy == "baseline-circle-aabb":
            # faithful two-pass arm: exclusive prefix sum, fixed offsets
            offsets = np.cumsum(counts) - counts
            total = int(counts.sum())
            keys_out = np.empty(total, dtype=np.uint64)
            values_out = np.empty(total, dtype=np.uint32)

            def phase_b_baseline(bounds):
                lo, hi = bounds
                gids = np.nonzero(retained[lo:hi])[0] + lo
                if gids.size == 0:
                    return
                g, tx, ty = expand(gids, np.zeros(gids.size, dtype=np.int64),
                                   counts[gids])
                keys = encode_keys(ty * grid_w + tx, depth[g])
                base = np.repeat(offsets[gids], counts[gids])
                pos = base + (np.arange(g.size) - np.repeat(
                    np.cumsum(counts[gids]) - counts[gids], counts[gids]))
                keys_out[pos] = keys
                values_out[pos] = g.astype(np.uint32)

            if pool is None:
                for bounds in chunks:
                    phase_b_baseline(bounds)
            else:
                list(pool.map(phase_b_baseline, chunks))
            buf_regrows = 0
            capacity = total
            keys_arr, values_arr, emitted = keys_out, values_out, total
        else:
            capacity = int(counts.sum()) if initial_capacity is None else int(initial_capacity)
            buf = PairBuffer(capacity)
            schedule = partition_work(rects, retained, BATCH_CHUNK)
            precise = strategy == "precise"

            def emit(g, tx, ty):
                if precise and g.size:
                    m = precise_mask(g, tx, ty)
                    g, tx, ty = g[m], tx[m], ty[m]
                if g.size:
                    buf.append(encode_keys(ty * grid_w + tx, depth[g]),
                               g.astype(np.uint32))

            def phase_b_inline(bounds):
                lo, hi = bounds
                ids = schedule.inline_ids
                gids = ids[(ids >= lo) & (ids < hi)]
                if gids.size == 0:
                    return
                emit(gids.astype(np.int64), rects[gids, 0].astype(np.int64),
                     rects[gids, 1].astype(np.int64))

            def phase_b_batch(items):
                g, tx, ty = expand(items[:, 0], items[:, 1], items[:, 2])
                emit(g, tx, ty)

            tasks = [(phase_b_inline, b) for b in chunks]
            batch = schedule.batch
            for s in range(0, batch.shape[0], 2048):
                tasks.append((phase_b_batch, batch[s:s + 2048]))
            if pool is None:
                for fn, arg in tasks:
                    fn(arg)
            else:
                list(pool.map(lambda t: t[0](t[1]), tasks))
            keys_arr = buf.keys[:buf.cursor].copy()
            values_arr = buf.values[:buf.cursor].copy()
            emitted = buf.cursor
            buf_regrows = buf.regrows
            capacity = buf.capacity
    finally:
        if pool is not None:
            pool.shutdown()

    return BinOutput(
        splat=splat, depth=depth, retained=retained, tile_rects=rects,
        tile_counts=counts, keys=keys_arr, values=values_arr,
        emitted_count=int(emitted),
        gaussians_retained=int(retained.sum()),
        gaussians_degenerate=int(degenerate.sum()),
        buffer_regrows=int(buf_regrows), capacity=int(capacity),
        grid_w=grid_w, grid_h=grid_h, strategy=strategy, tau=float(tau),
    )
