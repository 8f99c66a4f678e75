"""Per-stage timing breakdown across strategies and worker counts.

Shows where frame time goes (binning vs sort vs render) and how the
precise strategy shrinks the sort and render stages by feeding them fewer
pairs. Timings are wall-clock; counters are deterministic.
"""

import os

import tilesplat as ts

scene = ts.gen_synthetic("elongated", 12000, seed=17)
cameras = ts.orbit_cameras(2, radius=14.0, width=512, height=288)

for strategy in ("baseline-circle-aabb", "precise"):
    for workers in (1, os.cpu_count() or 1):
        rep = ts.bench_frames(scene, cameras, strategy, repeat=3,
                              workers=workers)
        stage = rep["stage_percent"]
        print(f"{strategy:22s} workers={workers}: "
              f"avg {rep['avg_ms']:7.1f} ms/round | "
              f"bin {stage['preprocess_bin']:4.1f}% "
              f"sort {stage['sort']:4.1f}% "
              f"render {stage['render']:4.1f}% | "
              f"pairs {rep['pairs_emitted']}")
