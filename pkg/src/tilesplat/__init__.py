"""tilesplat: a CPU tile-based rasterizer for 3D Gaussian splatting.

The pipeline is preprocess+bin -> sort -> render with switchable tile
intersection strategies (baseline circle AABB, tight AABB, exact
ellipse-tile test) so redundancy can be measured while the rendered
output stays bit-identical across strategies.
"""

from .binning import (BinOutput, STRATEGIES, decode_key, decode_keys,
                      encode_key, encode_keys, partition_work,
                      preprocess_and_bin)
from .constants import TAU_DEFAULT, TILE_SIZE
from .extent import (baseline_aabb, baseline_radius, power_cutoff,
                     power_cutoffs, tight_aabb, tile_range, tile_ranges)
from .intersect import (chord_overlaps_segment, min_mahalanobis_on_rect,
                        oracle_intersects, tile_intersects_ellipse,
                        tiles_intersect_ellipse)
from .model_io import (ActivatedScene, Camera, Scene, activate, gen_synthetic,
                       load_cameras, load_ply, look_at_camera, make_camera,
                       orbit_cameras, save_cameras, save_ply)
from .pipeline import (CompareReport, Framebuffer, FrameStats, Pipeline,
                       bench_frames, compare_modes, max_abs_diff, psnr,
                       run_frame)
from .projection import (ProjectedGaussians, compute_cov2d, compute_cov3d,
                         conic_from_cov2d, eigenvalues_2x2, frustum_cull,
                         ndc2pix, project_gaussians)
from .render import eval_sh_color, render_frame, render_tile
from .sorting import UnsortedPairsError, sort_pairs, tile_range_table

__version__ = "0.1.0"

__all__ = [
    "ActivatedScene", "BinOutput", "Camera", "CompareReport", "Framebuffer",
    "FrameStats", "Pipeline", "ProjectedGaussians", "STRATEGIES",
    "Scene", "TAU_DEFAULT", "TILE_SIZE", "UnsortedPairsError", "activate",
    "baseline_aabb", "baseline_radius", "bench_frames",
    "chord_overlaps_segment", "compare_modes", "compute_cov2d",
    "compute_cov3d", "conic_from_cov2d", "decode_key", "decode_keys",
    "eigenvalues_2x2", "encode_key", "encode_keys", "eval_sh_color",
    "frustum_cull", "gen_synthetic", "load_cameras", "load_ply",
    "look_at_camera", "make_camera", "max_abs_diff",
    "min_mahalanobis_on_rect", "ndc2pix", "oracle_intersects",
    "orbit_cameras", "partition_work", "power_cutoff", "power_cutoffs",
    "preprocess_and_bin", "project_gaussians", "psnr", "render_frame",
    "render_tile", "run_frame", "save_cameras", "save_ply", "sort_pairs",
    "tight_aabb", "tile_intersects_ellipse", "tile_range", "tile_range_table",
    "tile_ranges", "tiles_intersect_ellipse",
]
