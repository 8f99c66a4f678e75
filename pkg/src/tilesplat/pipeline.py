"""Frame orchestration: bin -> sort -> render, with stage timing and stats.

One-time per-scene work (activation, array materialization) happens in the
Pipeline constructor, outside the timed region, so the stage breakdown
reflects the three pipeline stages and not allocation noise.

Reports are versioned JSON documents; the field-by-field schema lives in
docs/report-schema.md.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .binning import STRATEGIES, preprocess_and_bin
from .constants import TAU_DEFAULT
from .model_io import ActivatedScene, Scene, activate
from .render import render_frame
from .sorting import sort_pairs, tile_range_table

REPORT_SCHEMA_VERSION = 1


@dataclass
class FrameStats:
    """Stage wall times (ns) and redundancy counters for one frame."""

    strategy: str
    tau: float
    workers: int
    preprocess_bin_ns: int = 0
    sort_ns: int = 0
    render_ns: int = 0
    total_ns: int = 0
    pairs_emitted: int = 0
    pairs_contributing: int = 0
    gaussians_retained: int = 0
    gaussians_degenerate: int = 0
    tiles_nonempty: int = 0
    pair_buffer_bytes: int = 0
    buffer_regrows: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Framebuffer:
    image: np.ndarray      # (H, W, 3) float32, linear
    background: np.ndarray  # (3,) float32

    @property
    def width(self) -> int:
        return int(self.image.shape[1])

    @property
    def height(self) -> int:
        return int(self.image.shape[0])


class Pipeline:
    """Holds a scene activated once; renders frames for arbitrary cameras."""

    def __init__(self, scene, sh_degree=3):
        if isinstance(scene, Scene):
            self.activated = activate(scene)
        elif isinstance(scene, ActivatedScene):
            self.activated = scene
        else:
            raise TypeError("scene must be a Scene or ActivatedScene")
        self.sh_degree = int(sh_degree)

    def render(self, camera, strategy="precise", tau=TAU_DEFAULT,
               background=(0.0, 0.0, 0.0), workers=1,
               initial_capacity=None, pipelined=True):
        """Run the three stages; returns (Framebuffer, FrameStats)."""
        workers = max(1, int(workers))
        stats = FrameStats(strategy=strategy, tau=float(tau), workers=workers)

        t0 = time.perf_counter_ns()
        out = preprocess_and_bin(self.activated, camera, strategy, tau,
                                 workers=workers, sh_degree=self.sh_degree,
                                 initial_capacity=initial_capacity)
        t1 = time.perf_counter_ns()
        keys, values = sort_pairs(out.keys, out.values, workers=workers,
                                  grid_tiles=out.grid_w * out.grid_h,
                                  max_value=max(self.activated.count, 1))
        starts = tile_range_table(keys, out.grid_w, out.grid_h)
        t2 = time.perf_counter_ns()
        image, contrib, tiles_nonempty = render_frame(
            out.splat, values, starts, camera.width, camera.height,
            background, tau, workers=workers, pipelined=pipelined)
        t3 = time.perf_counter_ns()

        stats.preprocess_bin_ns = t1 - t0
        stats.sort_ns = t2 - t1
        stats.render_ns = t3 - t2
        stats.total_ns = t3 - t0
        stats.pairs_emitted = out.emitted_count
        stats.pairs_contributing = int(contrib.sum())
        stats.gaussians_retained = out.gaussians_retained
        stats.gaussians_degenerate = out.gaussians_degenerate
        stats.tiles_nonempty = tiles_nonempty
        stats.pair_buffer_bytes = out.pair_buffer_bytes
        stats.buffer_regrows = out.buffer_regrows
        bg = np.asarray(background, dtype=np.float32).reshape(3)
        return Framebuffer(image=image, background=bg), stats


def run_frame(scene, camera, strategy="precise", tau=TAU_DEFAULT,
              background=(0.0, 0.0, 0.0), workers=1, sh_degree=3,
              **kwargs):
    """One-shot convenience wrapper around :class:`Pipeline`."""
    return Pipeline(scene, sh_degree=sh_degree).render(
        camera, strategy, tau, background, workers, **kwargs)


def psnr(a, b):
    """PSNR in dB over [0, 1] channels; the string "identical" when MSE is 0."""
    ia = a.image if isinstance(a, Framebuffer) else np.asarray(a)
    ib = b.image if isinstance(b, Framebuffer) else np.asarray(b)
    if ia.shape != ib.shape:
        raise ValueError(f"shape mismatch: {ia.shape} vs {ib.shape}")
    mse = float(np.mean((ia.astype(np.float64) - ib.astype(np.float64)) ** 2))
    if mse == 0.0:
        return "identical"
    return 10.0 * math.log10(1.0 / mse)


def max_abs_diff(a, b) -> float:
    ia = a.image if isinstance(a, Framebuffer) else np.asarray(a)
    ib = b.image if isinstance(b, Framebuffer) else np.asarray(b)
    if ia.size == 0:
        return 0.0
    return float(np.max(np.abs(ia.astype(np.float64) - ib.astype(np.float64))))


@dataclass
class CompareReport:
    """Cross-strategy frame stats with pairwise image-difference metrics."""

    strategies: list
    frames: list = field(default_factory=list)

    def aggregate(self) -> dict:
        out = {}
        for s in self.strategies:
            rows = [f["stats"][s] for f in self.frames]
            out[s] = {
                "frames": len(rows),
                "pairs_emitted_total": sum(r["pairs_emitted"] for r in rows),
                "pairs_contributing_total": sum(r["pairs_contributing"] for r in rows),
                "pair_buffer_bytes_total": sum(r["pair_buffer_bytes"] for r in rows),
            }
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "compare",
            "strategies": list(self.strategies),
            "frames": self.frames,
            "aggregate": self.aggregate(),
        }


def compare_modes(scene, cameras, strategies=STRATEGIES, tau=TAU_DEFAULT,
                  background=(0.0, 0.0, 0.0), workers=1, sh_degree=3) -> CompareReport:
    """Render every camera under every strategy; PSNR matrix per frame."""
    strategies = list(strategies)
    if len(strategies) < 2:
        raise ValueError("compare_modes needs at least two strategies")
    pipe = Pipeline(scene, sh_degree=sh_degree)
    report = CompareReport(strategies=strategies)
    for cam in cameras:
        frames = {}
        stats = {}
        for s in strategies:
            fb, st = pipe.render(cam, s, tau, background, workers)
            frames[s] = fb
            stats[s] = st.to_dict()
        psnr_matrix = {}
        maxdiff = {}
        for i, si in enumerate(strategies):
            for sj in strategies[i:]:
                if si == sj:
                    val, dv = "identical", 0.0
                else:
                    val = psnr(frames[si], frames[sj])
                    dv = max_abs_diff(frames[si], frames[sj])
                psnr_matrix[f"{si}|{sj}"] = val
                psnr_matrix[f"{sj}|{si}"] = val
                maxdiff[f"{si}|{sj}"] = dv
                maxdiff[f"{sj}|{si}"] = dv
        base = stats[strategies[0]]["pairs_emitted"]
        ratios = {s: (stats[s]["pairs_emitted"] / base if base else 0.0)
                  for s in strategies}
        report.frames.append({
            "frame_id": cam.cam_id,
            "stats": stats,
            "psnr": psnr_matrix,
            "max_abs_diff": maxdiff,
            "pairs_emitted_ratio_vs_first": ratios,
        })
    return report


def bench_frames(scene, cameras, strategy="precise", repeat=3, tau=TAU_DEFAULT,
                 background=(0.0, 0.0, 0.0), workers=1, sh_degree=3) -> dict:
    """Timing report over repeats; one untimed warm-up round is excluded."""
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    pipe = Pipeline(scene, sh_degree=sh_degree)
    for cam in cameras:  # warm-up: first-touch allocation and JIT effects
        pipe.render(cam, strategy, tau, background, workers)
    runs = []          # flat list of FrameStats
    rounds = []        # one total per repeat over the whole camera set
    counters = {}
    for _ in range(repeat):
        round_ns = 0
        for cam in cameras:
            fb, st = pipe.render(cam, strategy, tau, background, workers)
            runs.append(st)
            round_ns += st.total_ns
            frame_counters = (st.pairs_emitted, st.pairs_contributing,
                              st.gaussians_retained, st.tiles_nonempty)
            counters.setdefault(cam.cam_id, frame_counters)
            if counters[cam.cam_id] != frame_counters:
                raise AssertionError("non-deterministic counters across repeats")
        rounds.append(round_ns)
    rounds = np.asarray(rounds, dtype=np.float64)
    totals = np.array([r.total_ns for r in runs], dtype=np.float64)
    stages = {
        "preprocess_bin": np.array([r.preprocess_bin_ns for r in runs], dtype=np.float64),
        "sort": np.array([r.sort_ns for r in runs], dtype=np.float64),
        "render": np.array([r.render_ns for r in runs], dtype=np.float64),
    }
    stage_sum = sum(v.sum() for v in stages.values())
    per_frame = {}
    for i, cam in enumerate(cameras):
        frame_totals = totals[i::len(cameras)]
        per_frame[cam.cam_id] = {
            "avg_ms": float(frame_totals.mean() / 1e6),
            "max_ms": float(frame_totals.max() / 1e6),
            "min_ms": float(frame_totals.min() / 1e6),
        }
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "bench",
        "strategy": strategy,
        "tau": float(tau),
        "workers": int(workers),
        "repeat": int(repeat),
        "frames_per_repeat": len(cameras),
        "avg_ms": float(rounds.mean() / 1e6),
        "max_ms": float(rounds.max() / 1e6),
        "min_ms": float(rounds.min() / 1e6),
        "frame_ms": per_frame,
        "stage_ms": {k: float(v.mean() / 1e6) for k, v in stages.items()},
        "stage_percent": {k: float(100.0 * v.sum() / stage_sum)
                          for k, v in stages.items()},
        "stage_coverage_percent": float(100.0 * stage_sum / totals.sum()),
        "pairs_emitted": [int(r.pairs_emitted) for r in runs[:len(cameras)]],
        "pairs_contributing": [int(r.pairs_contributing) for r in runs[:len(cameras)]],
    }
