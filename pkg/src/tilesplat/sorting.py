"""LSD radix sort for (tile||depth, index) pairs and per-tile range tables.

Stable 8-bit-digit passes over the 32-bit value first, then over the
64-bit key, give (key, value) order for any input permutation; the value
acts as the tie-break without widening the key layout. Only bytes that
can be nonzero are processed (tile-index width from the grid size, value
width from the scene size). Each pass histograms fixed-size chunks,
prefix-sums (digit-major, then chunk-major), and scatters; chunks are
independent so both phases parallelize with a deterministic result for
any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

# Fixed chunking keeps per-chunk histograms (and thus the scatter layout)
# independent of the worker count.
CHUNK = 1 << 15


class UnsortedPairsError(ValueError):
    """Range extraction was handed keys that are not nondecreasing."""


@njit(cache=True, nogil=True)
def _hist_u64(src, shift, lo, hi, counts):
    for i in range(lo, hi):
        counts[(src[i] >> shift) & np.uint64(0xFF)] += 1


@njit(cache=True, nogil=True)
def _scatter_u64(keys, vals, shift, lo, hi, offsets, out_keys, out_vals):
    for i in range(lo, hi):
        d = (keys[i] >> shift) & np.uint64(0xFF)
        p = offsets[d]
        offsets[d] = p + 1
        out_keys[p] = keys[i]
        out_vals[p] = vals[i]


@njit(cache=True, nogil=True)
def _hist_u32(src, shift, lo, hi, counts):
    for i in range(lo, hi):
        counts[(src[i] >> shift) & np.uint32(0xFF)] += 1


@njit(cache=True, nogil=True)
def _scatter_u32(keys, vals, shift, lo, hi, offsets, out_keys, out_vals):
    for i in range(lo, hi):
        d = (vals[i] >> shift) & np.uint32(0xFF)
        p = offsets[d]
        offsets[d] = p + 1
        out_keys[p] = keys[i]
        out_vals[p] = vals[i]


def _byte_width(max_exclusive: int) -> int:
    if max_exclusive <= 1:
        return 0
    bits = int(max_exclusive - 1).bit_length()
    return (bits + 7) // 8


def _run_pass(keys, vals, out_keys, out_vals, shift, on_value, bounds, pool):
    nch = len(bounds) - 1
    counts = np.zeros((nch, 256), dtype=np.int64)
    hist = _hist_u32 if on_value else _hist_u64
    scatter = _scatter_u32 if on_value else _scatter_u64
    src = vals if on_value else keys
    shift = np.uint32(shift) if on_value else np.uint64(shift)

    def do_hist(ci):
        hist(src, shift, bounds[ci], bounds[ci + 1], counts[ci])

    if pool is None:
        for ci in range(nch):
            do_hist(ci)
    else:
        list(pool.map(do_hist, range(nch)))

    totals = counts.sum(axis=0)
    base = np.concatenate(([0], np.cumsum(totals)[:-1]))
    chunk_prefix = np.cumsum(counts, axis=0) - counts  # exclusive over chunks
    offsets = base[None, :] + chunk_prefix

    def do_scatter(ci):
        scatter(keys, vals, shift, bounds[ci], bounds[ci + 1],
                offsets[ci].copy(), out_keys, out_vals)

    if pool is None:
        for ci in range(nch):
            do_scatter(ci)
    else:
        list(pool.map(do_scatter, range(nch)))


def sort_pairs(keys, values, workers=1, grid_tiles=None, max_value=None):
    """Sort pairs by key, ties broken by ascending value.

    ``grid_tiles`` (tile count) and ``max_value`` (exclusive value bound)
    limit which digits are processed; omitted bounds process all bytes.
    Inputs are not mutated.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    values = np.ascontiguousarray(values, dtype=np.uint32)
    n = keys.shape[0]
    if values.shape[0] != n:
        raise ValueError("keys and values must have equal length")
    if n == 0:
        return keys.copy(), values.copy()

    value_bytes = 4 if max_value is None else _byte_width(int(max_value))
    tile_bytes = 4 if grid_tiles is None else _byte_width(int(grid_tiles))
    passes = [(s, True) for s in range(0, 8 * value_bytes, 8)]
    passes += [(s, False) for s in range(0, 32, 8)]             # depth bytes
    passes += [(32 + s, False) for s in range(0, 8 * tile_bytes, 8)]

    bounds = list(range(0, n, CHUNK)) + [n]
    src_k, src_v = keys.copy(), values.copy()
    dst_k = np.empty_like(src_k)
    dst_v = np.empty_like(src_v)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 and len(bounds) > 2 else None
    try:
        for shift, on_value in passes:
            _run_pass(src_k, src_v, dst_k, dst_v, shift, on_value, bounds, pool)
            src_k, dst_k = dst_k, src_k
            src_v, dst_v = dst_v, src_v
    finally:
        if pool is not None:
            pool.shutdown()
    return src_k, src_v


def tile_range_table(sorted_keys, grid_w, grid_h) -> np.ndarray:
    """Half-open [start, end) indices per tile as a (tiles + 1,) array.

    ``starts[t] : starts[t + 1]`` slices the pairs whose key's high 32 bits
    equal ``t``. Raises if the keys are not sorted.
    """
    sorted_keys = np.asarray(sorted_keys, dtype=np.uint64)
    if sorted_keys.size and np.any(sorted_keys[1:] < sorted_keys[:-1]):
        raise UnsortedPairsError("pair keys are not nondecreasing")
    tiles = (sorted_keys >> np.uint64(32)).astype(np.int64)
    total = int(grid_w) * int(grid_h)
    if tiles.size and int(tiles[-1]) >= total:
        raise ValueError("tile index exceeds the grid")
    return np.searchsorted(tiles, np.arange(total + 1), side="left")
