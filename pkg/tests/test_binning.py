"""Fused binning: strategy monotonicity, keys, work partition, buffers."""

import math

import numpy as np
import pytest

import tilesplat as ts
from tests.conftest import (identity_camera, make_raw_scene, pair_set,
                            visible_tile_set)

TAU = 1.0 / 255.0


def test_empty_scene():
    out = ts.preprocess_and_bin(ts.gen_synthetic("mixed", 0, 1),
                                identity_camera())
    assert out.emitted_count == 0
    assert out.gaussians_retained == 0
    assert out.keys.size == 0


def test_single_tile_gaussian_all_strategies():
    # small isotropic splat at pixel (24, 24), extent +-3px: inside tile (1, 1)
    cam = identity_camera(64, 64, focal=32)
    z = 16.0
    ndc = (2 * 24 + 1) / 64 - 1
    scene = make_raw_scene([[ndc * z, ndc * z, z]], [0.4, 0.4, 0.4], [0.9])
    for strat in ts.STRATEGIES:
        out = ts.preprocess_and_bin(scene, cam, strat)
        assert out.emitted_count == 1, strat
        tiles, depths = ts.decode_keys(out.keys)
        assert tiles[0] == 1 * 4 + 1
        assert depths[0] == np.float32(16.0)
        assert out.values[0] == 0


def _fig_tile_counts(scene, cam):
    counts = {}
    tiles = {}
    for strat in ts.STRATEGIES:
        out = ts.preprocess_and_bin(scene, cam, strat)
        counts[strat] = out.emitted_count
        tiles[strat] = set(ts.decode_keys(out.keys)[0].tolist())
    return counts, tiles


def test_redundancy_figure_16_vs_4():
    # axis-aligned thin splat (sigma 10px by ~1px, opacity 0.6) centered at
    # pixel (32, 24) on a 64x64 screen: the baseline circle square covers
    # all 16 tiles while the tight rectangle and exact test keep one row
    cam = identity_camera(64, 64, focal=32)
    z = 32.0
    scene = make_raw_scene(
        [[((2 * 32 + 1) / 64 - 1) * z, ((2 * 24 + 1) / 64 - 1) * z, z]],
        [10.0, 1.0, 0.01], [0.6])
    counts, tiles = _fig_tile_counts(scene, cam)
    assert counts["baseline-circle-aabb"] == 16
    assert counts["tight-aabb"] == 4
    assert counts["precise"] == 4
    assert tiles["precise"] <= tiles["tight-aabb"] <= tiles["baseline-circle-aabb"]


def test_redundancy_rotated_strict_chain():
    # the 45-degree case: corner tiles of the tight rectangle miss the
    # ellipse, so all three inclusions are strict
    cam = identity_camera(64, 64, focal=32)
    z = 32.0
    q = [math.cos(math.pi / 8), 0.0, 0.0, math.sin(math.pi / 8)]
    scene = make_raw_scene(
        [[((2 * 40 + 1) / 64 - 1) * z, ((2 * 40 + 1) / 64 - 1) * z, z]],
        [10.0, 0.6, 0.01], [0.6], quats=[q])
    counts, tiles = _fig_tile_counts(scene, cam)
    assert counts["baseline-circle-aabb"] == 16
    assert counts["tight-aabb"] == 9
    assert counts["precise"] == 7
    assert tiles["precise"] < tiles["tight-aabb"] < tiles["baseline-circle-aabb"]


def test_strategy_monotonicity_random_scene(elongated_scene, orbit3):
    for cam in orbit3:
        sets = {}
        for strat in ts.STRATEGIES:
            out = ts.preprocess_and_bin(elongated_scene, cam, strat)
            sets[strat] = pair_set(out)
            assert out.emitted_count == len(sets[strat])
        assert sets["precise"] <= sets["tight-aabb"] <= sets["baseline-circle-aabb"]


def test_elongated_reduction_well_under_half(elongated_scene):
    # acceptance geometry: orbit radius 14 at 512x288 makes splats span
    # multiple tiles, where the thin-ellipse redundancy dominates
    cam = ts.orbit_cameras(3, 14.0, 512, 288)[0]
    precise = ts.preprocess_and_bin(elongated_scene, cam, "precise")
    base = ts.preprocess_and_bin(elongated_scene, cam, "baseline-circle-aabb")
    assert precise.emitted_count < 0.5 * base.emitted_count


def test_no_contributing_pair_dropped_small():
    scene = ts.gen_synthetic("mixed", 150, 21)
    cam = ts.orbit_cameras(1, 24.0, 160, 112)[0]
    out = ts.preprocess_and_bin(scene, cam, "precise")
    required = visible_tile_set(out, cam, TAU)
    emitted = pair_set(out)
    assert required <= emitted


def test_key_roundtrip_million():
    rng = np.random.default_rng(0)
    tiles = rng.integers(0, 1 << 20, 1_000_000)
    depths = rng.uniform(0.2001, 5000.0, 1_000_000).astype(np.float32)
    keys = ts.encode_keys(tiles, depths)
    t2, d2 = ts.decode_keys(keys)
    assert np.array_equal(t2, tiles)
    assert np.array_equal(d2, depths)


def test_key_order_matches_tile_depth_order():
    rng = np.random.default_rng(1)
    tiles = rng.integers(0, 512, 20_000)
    depths = rng.uniform(0.21, 800.0, 20_000).astype(np.float32)
    keys = ts.encode_keys(tiles, depths)
    by_key = np.argsort(keys, kind="stable")
    by_pair = np.lexsort((depths, tiles))
    assert np.array_equal(tiles[by_key], tiles[by_pair])
    assert np.array_equal(depths[by_key], depths[by_pair])


def test_partition_work_all_single_tile():
    rects = np.array([[1, 1, 1, 1], [3, 2, 3, 2]], dtype=np.int64)
    sched = ts.partition_work(rects, np.array([True, True]))
    assert sched.batch.shape[0] == 0
    assert sched.inline_ids.tolist() == [0, 1]


def test_partition_work_40_tiles_two_chunks():
    rects = np.array([[0, 0, 7, 4]], dtype=np.int64)  # 8 x 5 = 40 tiles
    sched = ts.partition_work(rects, np.array([True]), chunk=32)
    assert sched.batch.shape[0] == 2
    assert sched.batch[0].tolist() == [0, 0, 32]
    assert sched.batch[1].tolist() == [0, 32, 40]


def test_partition_work_inactive_excluded():
    rects = np.array([[0, 0, 3, 3], [0, 0, 0, 0]], dtype=np.int64)
    sched = ts.partition_work(rects, np.array([False, False]))
    assert sched.inline_ids.size == 0 and sched.batch.shape[0] == 0


def sorted_pairs(out, scene_count):
    keys, values = ts.sort_pairs(out.keys, out.values,
                                 grid_tiles=out.grid_w * out.grid_h,
                                 max_value=scene_count)
    return keys, values


def test_worker_counts_same_sorted_pairs(mixed_scene, orbit3):
    outs = [ts.preprocess_and_bin(mixed_scene, orbit3[1], "precise", workers=w)
            for w in (1, 4)]
    assert outs[0].emitted_count == outs[1].emitted_count
    a = sorted_pairs(outs[0], mixed_scene.count)
    b = sorted_pairs(outs[1], mixed_scene.count)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_buffer_regrow_counted_never_truncates(mixed_scene, orbit3):
    normal = ts.preprocess_and_bin(mixed_scene, orbit3[0], "precise")
    assert normal.buffer_regrows == 0
    forced = ts.preprocess_and_bin(mixed_scene, orbit3[0], "precise",
                                   initial_capacity=4)
    assert forced.buffer_regrows > 0
    assert forced.emitted_count == normal.emitted_count
    a = sorted_pairs(normal, mixed_scene.count)
    b = sorted_pairs(forced, mixed_scene.count)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_pair_values_index_retained_splats(mixed_scene, orbit3):
    out = ts.preprocess_and_bin(mixed_scene, orbit3[2], "precise")
    assert out.values.size == out.emitted_count
    assert np.all(out.retained[out.values])
    tiles, depths = ts.decode_keys(out.keys)
    assert np.all(tiles < out.grid_w * out.grid_h)
    assert np.all(depths > 0.2)
    assert np.all(out.values < mixed_scene.count)


def test_unknown_strategy_rejected(mixed_scene, orbit3):
    with pytest.raises(ValueError, match="strategy"):
        ts.preprocess_and_bin(mixed_scene, orbit3[0], "bogus")
