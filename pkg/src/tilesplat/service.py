"""HTTP frame service: camera poses in, rendered frames plus stats out.

Request/response protocol (HTTP/1.1, JSON in, PNG out):

- ``GET /meta`` -> scene metadata: gaussian count, bounding box, a
  suggested centroid-facing start pose, available strategies.
- ``POST /frame`` with body::

      {"position": [x, y, z],
       "rotation": [9 row-major world-to-camera numbers]  (or "yaw"/"pitch"),
       "width": W, "height": H,
       "strategy": "precise" | "tight-aabb" | "baseline-circle-aabb",
       "fov_y": degrees (default 60)}

  -> PNG body with render stats in response headers:
  ``X-Flash-Frame-Ms``, ``X-Flash-Pairs-Emitted``,
  ``X-Flash-Pairs-Contributing``, ``X-Flash-Strategy``,
  ``X-Flash-Gaussians-Retained``.

Errors: 400 invalid pose/JSON, 413 oversize resolution, 429 when the
bounded in-flight limit is exceeded. The scene is immutable and shared;
each request renders independently, so concurrent responses are
byte-identical to serial ones.
"""

from __future__ import annotations

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .binning import STRATEGIES
from .constants import TAU_DEFAULT
from .images import png_bytes
from .model_io import CameraValidationError, make_camera
from .pipeline import Pipeline


def yaw_pitch_rotation(yaw: float, pitch: float) -> np.ndarray:
    """World-to-camera rotation from yaw (about world y) then pitch.

    Matches the viewer's control convention: yaw 0, pitch 0 looks down +z;
    positive yaw turns toward +x; positive pitch looks up (-y, since the
    image y axis points down).
    """
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    r_yaw = np.array([[cy, 0.0, -sy], [0.0, 1.0, 0.0], [sy, 0.0, cy]])
    r_pitch = np.array([[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, -sp, cp]])
    return r_pitch @ r_yaw


class FrameService:
    """Immutable scene + render configuration behind an HTTP handler."""

    def __init__(self, scene, sh_degree=3, workers=1, default_strategy="precise",
                 tau=TAU_DEFAULT, background=(0.0, 0.0, 0.0),
                 max_pixels=1920 * 1080, max_inflight=4, static_dir=None):
        self.pipeline = Pipeline(scene, sh_degree=sh_degree)
        self.workers = max(1, int(workers))
        self.default_strategy = default_strategy
        self.tau = float(tau)
        self.background = tuple(background)
        self.max_pixels = int(max_pixels)
        self._inflight = threading.Semaphore(int(max_inflight))
        if static_dir is None:
            guess = Path(__file__).resolve().parents[2] / "frontend" / "dist"
            static_dir = guess if guess.is_dir() else None
        self.static_dir = Path(static_dir) if static_dir else None
        self._server = None

    # -- metadata ---------------------------------------------------------
    def meta(self) -> dict:
        act = self.pipeline.activated
        n = act.count
        if n:
            reach = 3.0 * float(act.scales.max())
            lo = (act.means.min(axis=0) - reach).tolist()
            hi = (act.means.max(axis=0) + reach).tolist()
            centroid = act.means.mean(axis=0)
            extent = float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
            start = (centroid + np.array([0.0, 0.0, -max(extent, 1.0)])).tolist()
            degenerate = False
        else:
            lo = hi = [0.0, 0.0, 0.0]
            centroid = np.zeros(3)
            start = [0.0, 0.0, -5.0]
            degenerate = True
        return {
            "count": n,
            "bbox": {"min": lo, "max": hi, "degenerate": degenerate},
            "suggested_pose": {
                "position": start,
                "target": centroid.tolist(),
                "yaw": 0.0,
                "pitch": 0.0,
            },
            "strategies": list(STRATEGIES),
            "defaults": {
                "strategy": self.default_strategy,
                "tau": self.tau,
                "max_pixels": self.max_pixels,
            },
        }

    # -- frame rendering --------------------------------------------------
    def render_pose(self, req: dict):
        """Validate a pose request and render it; returns (png, headers)."""
        try:
            width = int(req["width"])
            height = int(req["height"])
            position = [float(v) for v in req["position"]]
            if len(position) != 3:
                raise ValueError("position must have 3 numbers")
        except (KeyError, TypeError, ValueError) as e:
            raise PoseError(f"bad pose request: {e}") from e
        if width * height > self.max_pixels:
            raise OversizeError(
                f"{width}x{height} exceeds max pixels {self.max_pixels}")
        if "rotation" in req:
            rotation = np.asarray(req["rotation"], dtype=np.float64)
            if rotation.size != 9:
                raise PoseError("rotation must have 9 numbers")
            rotation = rotation.reshape(3, 3)
        elif "yaw" in req or "pitch" in req:
            rotation = yaw_pitch_rotation(float(req.get("yaw", 0.0)),
                                          float(req.get("pitch", 0.0)))
        else:
            raise PoseError("pose needs either rotation[9] or yaw/pitch")
        strategy = req.get("strategy", self.default_strategy)
        if strategy not in STRATEGIES:
            raise PoseError(f"unknown strategy {strategy!r}")
        fov_y = float(req.get("fov_y", 60.0))
        if not 5.0 <= fov_y <= 175.0:
            raise PoseError(f"fov_y {fov_y} out of range")
        tan_fovy = math.tan(math.radians(fov_y) / 2.0)
        fy = height / (2.0 * tan_fovy)
        try:
            camera = make_camera(width, height, position, rotation, fx=fy, fy=fy)
        except CameraValidationError as e:
            raise PoseError(str(e)) from e
        fb, stats = self.pipeline.render(camera, strategy, self.tau,
                                         self.background, self.workers)
        headers = {
            "X-Flash-Frame-Ms": f"{stats.total_ns / 1e6:.3f}",
            "X-Flash-Pairs-Emitted": str(stats.pairs_emitted),
            "X-Flash-Pairs-Contributing": str(stats.pairs_contributing),
            "X-Flash-Gaussians-Retained": str(stats.gaussians_retained),
            "X-Flash-Strategy": strategy,
        }
        return png_bytes(fb.image), headers

    # -- plumbing ---------------------------------------------------------
    def make_server(self, host, port) -> ThreadingHTTPServer:
        service = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):  # tests stay quiet
                pass

            def _send(self, code, body: bytes, ctype: str, extra=None):
                self.send_response(code)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header(
                    "Access-Control-Expose-Headers",
                    "X-Flash-Frame-Ms, X-Flash-Pairs-Emitted, "
                    "X-Flash-Pairs-Contributing, X-Flash-Gaussians-Retained, "
                    "X-Flash-Strategy")
                for k, v in (extra or {}).items():
                    self.send_header(k, v)
                self.end_headers()
                self.wfile.write(body)

            def _send_json(self, code, obj):
                self._send(code, json.dumps(obj).encode("utf-8"), "application/json")

            def do_OPTIONS(self):
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

            def do_GET(self):
                if self.path == "/meta":
                    self._send_json(200, service.meta())
                    return
                if service.static_dir is not None:
                    rel = "index.html" if self.path in ("/", "") else self.path.lstrip("/")
                    target = (service.static_dir / rel).resolve()
                    if target.is_file() and str(target).startswith(str(service.static_dir.resolve())):
                        ctype = {
                            ".html": "text/html", ".js": "text/javascript",
                            ".css": "text/css", ".map": "application/json",
                        }.get(target.suffix, "application/octet-stream")
                        self._send(200, target.read_bytes(), ctype)
                        return
                self._send_json(404, {"error": f"no such path {self.path}"})

            def do_POST(self):
                if self.path != "/frame":
                    self._send_json(404, {"error": f"no such path {self.path}"})
                    return
                if not service._inflight.acquire(blocking=False):
                    self._send_json(429, {"error": "too many in-flight requests"})
                    return
                try:
                    length = int(self.headers.get("Content-Length", "0"))
                    try:
                        req = json.loads(self.rfile.read(length) or b"{}")
                    except json.JSONDecodeError as e:
                        self._send_json(400, {"error": f"bad JSON: {e}"})
                        return
                    try:
                        body, headers = service.render_pose(req)
                    except OversizeError as e:
                        self._send_json(413, {"error": str(e)})
                        return
                    except PoseError as e:
                        self._send_json(400, {"error": str(e)})
                        return
                    self._send(200, body, "image/png", headers)
                finally:
                    service._inflight.release()

        server = ThreadingHTTPServer((host, port), Handler)
        self._server = server
        return server

    def serve_forever(self, host="127.0.0.1", port=8090):
        server = self.make_server(host, port)
        print(f"tilesplat frame service on http://{host}:{server.server_address[1]}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()


class PoseError(ValueError):
    pass


class OversizeError(ValueError):
    pass
