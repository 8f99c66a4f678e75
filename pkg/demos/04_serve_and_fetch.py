"""Run the frame service in-process and act as its first client.

The same HTTP API drives the browser viewer (frontend/): POST a camera
pose, get a PNG back, read the render stats from the response headers.
"""

import json
import threading
import urllib.request
from pathlib import Path

import tilesplat as ts
from tilesplat.service import FrameService

scene = ts.gen_synthetic("mixed", 3000, seed=5)
service = FrameService(scene, workers=2)
server = service.make_server("127.0.0.1", 0)
threading.Thread(target=server.serve_forever, daemon=True).start()
host, port = server.server_address
base = f"http://{host}:{port}"
print("service at", base)

with urllib.request.urlopen(f"{base}/meta") as resp:
    meta = json.loads(resp.read())
print("scene:", meta["count"], "gaussians, suggested pose",
      [round(v, 2) for v in meta["suggested_pose"]["position"]])

pose = {"position": meta["suggested_pose"]["position"], "yaw": 0.0,
        "pitch": 0.0, "width": 480, "height": 270}
out = Path(__file__).resolve().parent / "out"
out.mkdir(parents=True, exist_ok=True)
for strategy in ("precise", "baseline-circle-aabb"):
    req = urllib.request.Request(
        f"{base}/frame", data=json.dumps({**pose, "strategy": strategy}).encode(),
        headers={"Content-Type": "application/json"}, method="POST")
    with urllib.request.urlopen(req) as resp:
        body = resp.read()
        print(f"{strategy:22s} {resp.headers['X-Flash-Frame-Ms']:>8s} ms, "
              f"pairs {resp.headers['X-Flash-Pairs-Emitted']:>8s}, "
              f"{len(body)} PNG bytes")
        (out / f"frame_{strategy}.png").write_bytes(body)

server.shutdown()
print("wrote frames to", out)
