"""Command-line entry point: render, bench, compare, gen-synthetic, serve.

Exit codes: 0 success, 1 runtime error (I/O, parse, validation), 2 usage.
The default worker count comes from the TILESPLAT_WORKERS environment
variable when set. All defaults are echoed into the stats files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .binning import STRATEGIES
from .constants import TAU_DEFAULT
from .model_io import gen_synthetic, load_cameras, load_ply, save_ply
from .pipeline import Pipeline, bench_frames, compare_modes
from .images import write_png, write_ppm


def _default_workers() -> int:
    env = os.environ.get("TILESPLAT_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def _parse_background(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("background must be R,G,B")
    return tuple(parts)


def _add_common(p: argparse.ArgumentParser, cameras_required=True):
    p.add_argument("--model", required=True, help="scene PLY path")
    p.add_argument("--cameras", required=cameras_required, help="camera JSON path")
    p.add_argument("--mode", "--strategy", dest="strategy", default="precise",
                   choices=STRATEGIES, help="intersection strategy")
    p.add_argument("--tau", type=float, default=TAU_DEFAULT,
                   help="alpha threshold shared by extent and renderer")
    p.add_argument("--background", type=_parse_background, default=(0.0, 0.0, 0.0),
                   help="background R,G,B in [0,1], default black")
    p.add_argument("--workers", type=int, default=_default_workers(),
                   help="worker threads (env TILESPLAT_WORKERS)")
    p.add_argument("--sh-degree", type=int, default=3, choices=(0, 1, 2, 3))
    p.add_argument("--width", type=int, default=None, help="override camera width")
    p.add_argument("--height", type=int, default=None, help="override camera height")
    p.add_argument("--near", type=float, default=0.01)
    p.add_argument("--far", type=float, default=100.0)


def _load_inputs(args):
    scene = load_ply(args.model)
    cameras = load_cameras(args.cameras, near=args.near, far=args.far)
    if args.width or args.height:
        w = args.width
        h = args.height
        cameras = [c.resized(w or c.width, h or c.height) for c in cameras]
    return scene, cameras


def _echo_defaults(args) -> dict:
    return {
        "strategy": args.strategy,
        "tau": args.tau,
        "background": list(args.background),
        "workers": args.workers,
        "sh_degree": args.sh_degree,
        "tile_size": 16,
    }


def cmd_render(args) -> int:
    scene, cameras = _load_inputs(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pipe = Pipeline(scene, sh_degree=args.sh_degree)
    all_stats = []
    writer = write_png if args.format == "png" else write_ppm
    for cam in cameras:
        fb, stats = pipe.render(cam, args.strategy, args.tau, args.background,
                                args.workers)
        writer(fb.image, out_dir / f"{cam.cam_id}.{args.format}")
        all_stats.append({"frame_id": cam.cam_id, **stats.to_dict()})
    with open(out_dir / "stats.json", "w", encoding="utf-8") as f:
        json.dump({"schema_version": 1, "kind": "render",
                   "defaults": _echo_defaults(args), "frames": all_stats}, f, indent=2)
    return 0


def cmd_bench(args) -> int:
    scene, cameras = _load_inputs(args)
    report = bench_frames(scene, cameras, args.strategy, args.repeat, args.tau,
                          args.background, args.workers, args.sh_degree)
    report["defaults"] = _echo_defaults(args)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text)
    return 0


def cmd_compare(args) -> int:
    scene, cameras = _load_inputs(args)
    modes = args.modes.split(",")
    for m in modes:
        if m not in STRATEGIES:
            print(f"error: unknown mode {m!r}", file=sys.stderr)
            return 2
    report = compare_modes(scene, cameras, modes, args.tau, args.background,
                           args.workers, args.sh_degree)
    doc = report.to_dict()
    doc["defaults"] = _echo_defaults(args)
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text)
    return 0


def cmd_gen_synthetic(args) -> int:
    scene = gen_synthetic(args.preset, args.count, args.seed)
    save_ply(scene, args.out)
    print(f"wrote {scene.count} gaussians to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .service import FrameService

    scene = load_ply(args.model)
    service = FrameService(scene, sh_degree=args.sh_degree, workers=args.workers,
                           default_strategy=args.strategy, tau=args.tau,
                           background=args.background,
                           max_pixels=args.max_pixels,
                           max_inflight=args.max_inflight,
                           static_dir=args.static_dir)
    try:
        service.serve_forever(args.host, args.port)
    except OSError as e:
        print(f"error: cannot bind {args.host}:{args.port}: {e}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tilesplat",
        description="CPU tile-based Gaussian-splat rasterizer "
                    "(defaults: tau=1/255, tile=16, background black, precise mode)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one image per camera")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("ppm", "png"), default="ppm",
                   help="ppm is the bit-exact canonical output")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("bench", help="timed repeats with stage breakdown")
    _add_common(p)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--out", default=None, help="optional report JSON path")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("compare", help="cross-strategy stats and PSNR")
    _add_common(p)
    p.add_argument("--modes", default="precise,baseline-circle-aabb",
                   help="comma-separated strategy list")
    p.add_argument("--out", default=None, help="optional report JSON path")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("gen-synthetic", help="write a synthetic scene PLY")
    p.add_argument("preset", choices=("elongated", "isotropic", "mixed"))
    p.add_argument("count", type=int)
    p.add_argument("seed", type=int)
    p.add_argument("--out", required=True, help="output PLY path")
    p.set_defaults(fn=cmd_gen_synthetic)

    p = sub.add_parser("serve", help="HTTP frame service for the viewer")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8090)
    p.add_argument("--mode", "--strategy", dest="strategy", default="precise",
                   choices=STRATEGIES)
    p.add_argument("--tau", type=float, default=TAU_DEFAULT)
    p.add_argument("--background", type=_parse_background, default=(0.0, 0.0, 0.0))
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--sh-degree", type=int, default=3, choices=(0, 1, 2, 3))
    p.add_argument("--max-pixels", type=int, default=1920 * 1080)
    p.add_argument("--max-inflight", type=int, default=4)
    p.add_argument("--static-dir", default=None,
                   help="directory with the viewer bundle (default: frontend/dist if present)")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
