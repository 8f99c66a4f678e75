"""Scene and camera I/O plus synthetic scene generation.

Scenes follow the PLY layout used by publicly trained splat checkpoints:
binary little-endian, 62 float32 properties per vertex
(x y z, nx ny nz, f_dc_0..2, f_rest_0..44, opacity, scale_0..2, rot_0..3).
Parameters are stored raw (log scales, logit opacities, unnormalized
quaternions); :func:`activate` applies the activations the renderer uses.

Cameras are a JSON array of entries with id, width, height, position
(3 numbers), rotation (9 numbers, row-major world-to-camera), fx, fy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class PlyParseError(ValueError):
    """Header is not the expected binary PLY structure."""


class PlySchemaError(ValueError):
    """Header parses but the vertex properties do not match the schema."""


class PlyLengthError(ValueError):
    """Body does not contain the number of bytes the header promises."""


class CameraSchemaError(ValueError):
    """Camera JSON entry is missing a required field or has a bad shape."""


class CameraValidationError(ValueError):
    """Camera values are inconsistent (non-orthonormal rotation, bad size)."""


# Canonical vertex property order; offsets into the 248-byte stride depend on it.
PLY_PROPERTIES = (
    ["x", "y", "z", "nx", "ny", "nz"]
    + [f"f_dc_{i}" for i in range(3)]
    + [f"f_rest_{i}" for i in range(45)]
    + ["opacity"]
    + [f"scale_{i}" for i in range(3)]
    + [f"rot_{i}" for i in range(4)]
)
VERTEX_STRIDE = 4 * len(PLY_PROPERTIES)  # 62 floats = 248 bytes

SH_COEFFS = 16  # degree 3 basis size
SYNTHETIC_PRESETS = ("elongated", "isotropic", "mixed")


@dataclass
class Scene:
    """Raw (pre-activation) splat parameters, structure-of-arrays.

    ``sh`` is (N, 16, 3): index 0 holds the DC term per channel, indices
    1..15 the higher-order coefficients; the PLY stores the higher-order
    block channel-major (all 15 red, then green, then blue).
    """

    means: np.ndarray            # (N, 3) float32
    normals: np.ndarray          # (N, 3) float32, parsed and ignored
    sh: np.ndarray               # (N, 16, 3) float32
    logit_opacities: np.ndarray  # (N,) float32
    log_scales: np.ndarray       # (N, 3) float32
    rotations: np.ndarray        # (N, 4) float32 (w, x, y, z), as stored

    @property
    def count(self) -> int:
        return int(self.means.shape[0])


@dataclass
class ActivatedScene:
    """Scene after activations: ready for projection and rendering."""

    means: np.ndarray      # (N, 3) float32
    opacities: np.ndarray  # (N,) float32 in (0, 1)
    scales: np.ndarray     # (N, 3) float32 > 0
    rotations: np.ndarray  # (N, 4) float32, unit quaternions
    sh: np.ndarray         # (N, 16, 3) float32

    @property
    def count(self) -> int:
        return int(self.means.shape[0])


def activate(scene: Scene) -> ActivatedScene:
    """Apply sigmoid/exp/normalization to raw parameters.

    Total function: zero-norm quaternions map to the identity rotation
    instead of raising, since trained files can contain degenerate rows.
    """
    logits = scene.logit_opacities.astype(np.float32)
    # branch on sign so exp never overflows float32
    pos = logits >= 0
    e = np.exp(np.where(pos, -logits, logits))
    opacities = np.where(pos, np.float32(1.0) / (np.float32(1.0) + e),
                         e / (np.float32(1.0) + e))
    scales = np.exp(scene.log_scales.astype(np.float32))
    rot = scene.rotations.astype(np.float32)
    norms = np.sqrt(np.sum(rot * rot, axis=1))
    unit = np.empty_like(rot)
    ok = norms > 0
    unit[ok] = rot[ok] / norms[ok, None]
    unit[~ok] = np.array([1, 0, 0, 0], dtype=np.float32)
    return ActivatedScene(
        means=scene.means.astype(np.float32),
        opacities=opacities.astype(np.float32),
        scales=scales.astype(np.float32),
        rotations=unit,
        sh=scene.sh.astype(np.float32),
    )


def _read_header(f):
    lines = []
    while True:
        raw = f.readline()
        if not raw:
            raise PlyParseError("unexpected end of file inside header")
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise PlyParseError(f"non-ascii header line: {raw[:40]!r}") from None
        lines.append(line)
        if line == "end_header":
            return lines


def load_ply(path) -> Scene:
    """Load a binary little-endian splat PLY.

    Raw values are preserved exactly; activation is a separate step.
    """
    with open(path, "rb") as f:
        lines = _read_header(f)
        if lines[0] != "ply":
            raise PlyParseError(f"not a PLY file, first line: {lines[0]!r}")
        fmt = [l for l in lines if l.startswith("format")]
        if not fmt or fmt[0] != "format binary_little_endian 1.0":
            bad = fmt[0] if fmt else "<missing format line>"
            raise PlyParseError(f"unsupported format line: {bad!r}")
        count = None
        props = []
        for line in lines:
            if line.startswith("element "):
                parts = line.split()
                if len(parts) != 3 or parts[1] != "vertex":
                    raise PlyParseError(f"unsupported element line: {line!r}")
                try:
                    count = int(parts[2])
                except ValueError:
                    raise PlyParseError(f"bad vertex count line: {line!r}") from None
            elif line.startswith("property "):
                parts = line.split()
                if len(parts) != 3 or parts[1] != "float":
                    raise PlySchemaError(f"unsupported property line: {line!r}")
                props.append(parts[2])
        if count is None:
            raise PlyParseError("header has no 'element vertex' line")
        missing = [p for p in PLY_PROPERTIES if p not in props]
        if missing:
            raise PlySchemaError(f"missing vertex properties: {missing}")
        if props != PLY_PROPERTIES:
            extra = [p for p in props if p not in PLY_PROPERTIES]
            raise PlySchemaError(
                f"vertex properties deviate from the canonical layout "
                f"(extra or reordered: {extra or props[:8]})"
            )
        body = f.read()
    expected = count * VERTEX_STRIDE
    if len(body) < expected:
        raise PlyLengthError(
            f"vertex body truncated: expected {expected} bytes, got {len(body)}"
        )
    data = np.frombuffer(body[:expected], dtype="<f4").reshape(count, len(PLY_PROPERTIES))
    return _scene_from_payload(data)


def _scene_from_payload(data: np.ndarray) -> Scene:
    n = data.shape[0]
    sh = np.zeros((n, SH_COEFFS, 3), dtype=np.float32)
    sh[:, 0, :] = data[:, 6:9]
    rest = data[:, 9:54].reshape(n, 3, 15)  # channel-major on disk
    sh[:, 1:, :] = np.transpose(rest, (0, 2, 1))
    return Scene(
        means=np.ascontiguousarray(data[:, 0:3]),
        normals=np.ascontiguousarray(data[:, 3:6]),
        sh=sh,
        logit_opacities=np.ascontiguousarray(data[:, 54]),
        log_scales=np.ascontiguousarray(data[:, 55:58]),
        rotations=np.ascontiguousarray(data[:, 58:62]),
    )


def _payload_from_scene(scene: Scene) -> np.ndarray:
    n = scene.count
    data = np.empty((n, len(PLY_PROPERTIES)), dtype="<f4")
    data[:, 0:3] = scene.means
    data[:, 3:6] = scene.normals
    data[:, 6:9] = scene.sh[:, 0, :]
    data[:, 9:54] = np.transpose(scene.sh[:, 1:, :], (0, 2, 1)).reshape(n, 45)
    data[:, 54] = scene.logit_opacities
    data[:, 55:58] = scene.log_scales
    data[:, 58:62] = scene.rotations
    return data


def save_ply(scene: Scene, path) -> None:
    """Write a scene in the canonical binary PLY layout (round-trip exact)."""
    header = ["ply", "format binary_little_endian 1.0",
              f"element vertex {scene.count}"]
    header += [f"property float {p}" for p in PLY_PROPERTIES]
    header.append("end_header")
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(_payload_from_scene(scene).tobytes())


@dataclass
class Camera:
    """Pose plus intrinsics defining the view and the pixel grid."""

    width: int
    height: int
    position: np.ndarray         # (3,) float32, camera center in world
    world_to_camera: np.ndarray  # (4, 4) float32
    full_projection: np.ndarray  # (4, 4) float32, projection @ view
    tan_fovx: float
    tan_fovy: float
    focal_x: float
    focal_y: float
    cam_id: str = "0"
    near: float = 0.01
    far: float = 100.0

    @property
    def grid(self) -> tuple:
        from .constants import TILE_SIZE
        return (-(-self.width // TILE_SIZE), -(-self.height // TILE_SIZE))

    def resized(self, width: int, height: int) -> "Camera":
        """Same pose at a new resolution; focal lengths scale linearly."""
        fx = self.focal_x * (width / self.width)
        fy = self.focal_y * (height / self.height)
        rot = self.world_to_camera[:3, :3].astype(np.float64)
        return make_camera(width, height, self.position, rot, fx, fy,
                           near=self.near, far=self.far, cam_id=self.cam_id)


def perspective_matrix(tan_fovx, tan_fovy, near, far) -> np.ndarray:
    """Symmetric-frustum projection mapping camera +z depth into NDC."""
    p = np.zeros((4, 4), dtype=np.float64)
    p[0, 0] = 1.0 / tan_fovx
    p[1, 1] = 1.0 / tan_fovy
    p[2, 2] = far / (far - near)
    p[2, 3] = -(far * near) / (far - near)
    p[3, 2] = 1.0
    return p


def make_camera(width, height, position, rotation, fx, fy,
                near=0.01, far=100.0, cam_id="0",
                rotation_tol=1e-3) -> Camera:
    """Assemble a Camera from pose and pixel focal lengths.

    ``rotation`` is the 3x3 row-major world-to-camera rotation. It must be
    orthonormal within ``rotation_tol``.
    """
    width, height = int(width), int(height)
    if width < 16 or height < 16:
        raise CameraValidationError(f"camera size {width}x{height} below 16x16")
    pos = np.asarray(position, dtype=np.float64).reshape(3)
    rot = np.asarray(rotation, dtype=np.float64).reshape(3, 3)
    err = np.abs(rot @ rot.T - np.eye(3)).max()
    if err > rotation_tol:
        raise CameraValidationError(
            f"rotation not orthonormal: max |R R^T - I| = {err:.2e}"
        )
    view = np.eye(4, dtype=np.float64)
    view[:3, :3] = rot
    view[:3, 3] = -rot @ pos
    tan_fovx = width / (2.0 * fx)
    tan_fovy = height / (2.0 * fy)
    proj = perspective_matrix(tan_fovx, tan_fovy, near, far)
    return Camera(
        width=width,
        height=height,
        position=pos.astype(np.float32),
        world_to_camera=view.astype(np.float32),
        full_projection=(proj @ view).astype(np.float32),
        tan_fovx=float(tan_fovx),
        tan_fovy=float(tan_fovy),
        focal_x=float(fx),
        focal_y=float(fy),
        cam_id=str(cam_id),
        near=float(near),
        far=float(far),
    )


_CAMERA_FIELDS = ("id", "width", "height", "position", "rotation", "fx", "fy")


def load_cameras(path, near=0.01, far=100.0) -> list:
    """Load a JSON camera list; see the module docstring for the schema."""
    with open(path, "r", encoding="utf-8") as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise CameraSchemaError("camera file must contain a JSON array")
    cameras = []
    for i, entry in enumerate(entries):
        missing = [k for k in _CAMERA_FIELDS if k not in entry]
        if missing:
            raise CameraSchemaError(f"camera entry {i} missing fields: {missing}")
        cameras.append(make_camera(
            entry["width"], entry["height"], entry["position"],
            entry["rotation"], entry["fx"], entry["fy"],
            near=near, far=far, cam_id=str(entry["id"]),
        ))
    return cameras


def save_cameras(cameras, path) -> None:
    entries = []
    for cam in cameras:
        entries.append({
            "id": cam.cam_id,
            "width": cam.width,
            "height": cam.height,
            "position": [float(v) for v in cam.position],
            "rotation": [float(v) for v in cam.world_to_camera[:3, :3].reshape(9)],
            "fx": cam.focal_x,
            "fy": cam.focal_y,
        })
    with open(path, "w", encoding="utf-8") as f:
        json.dump(entries, f, indent=2)


def look_at_camera(position, target, width, height, fov_y_deg=60.0,
                   near=0.01, far=100.0, cam_id="0") -> Camera:
    """Camera at ``position`` looking at ``target`` (image +y follows world +y)."""
    pos = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - pos
    nrm = np.linalg.norm(fwd)
    if nrm == 0:
        raise CameraValidationError("look_at target equals camera position")
    fwd /= nrm
    up = np.array([0.0, 1.0, 0.0])
    if abs(np.dot(up, fwd)) > 0.999:
        up = np.array([1.0, 0.0, 0.0])
    right = np.cross(up, fwd)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    rot = np.stack([right, down, fwd])  # rows: world-to-camera
    tan_fovy = math.tan(math.radians(fov_y_deg) / 2.0)
    fy = height / (2.0 * tan_fovy)
    fx = fy  # square pixels; tan_fovx follows the aspect ratio
    return make_camera(width, height, pos, rot, fx, fy, near=near, far=far,
                       cam_id=cam_id)


def orbit_cameras(n, radius, width, height, fov_y_deg=60.0, target=(0, 0, 0),
                  elevation=0.35, near=0.01, far=100.0) -> list:
    """``n`` cameras on a circle around ``target``, all looking inward."""
    target = np.asarray(target, dtype=np.float64)
    cams = []
    for i in range(n):
        ang = 2.0 * math.pi * i / max(n, 1)
        pos = target + radius * np.array(
            [math.cos(ang), math.sin(elevation), math.sin(ang)]
        )
        cams.append(look_at_camera(pos, target, width, height, fov_y_deg,
                                   near=near, far=far, cam_id=str(i)))
    return cams


# Synthetic generator parameters (documented because acceptance thresholds
# depend on them): 68% of opacities drawn in (0.02, 0.35), the rest in
# (0.35, 0.98); elongated axis ratios drawn in [10, 14].
_OPACITY_LOW_FRACTION = 0.68
_PRESET_STREAM = {"elongated": 1, "isotropic": 2, "mixed": 3}


def gen_synthetic(preset: str, count: int, seed: int) -> Scene:
    """Deterministic synthetic scene in the same raw-parameter schema."""
    if preset not in SYNTHETIC_PRESETS:
        raise ValueError(f"unknown preset {preset!r}, expected one of {SYNTHETIC_PRESETS}")
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng([int(seed), _PRESET_STREAM[preset]])

    means = rng.uniform(-8.0, 8.0, size=(count, 3))

    n_low = int(round(_OPACITY_LOW_FRACTION * count))
    opac = np.empty(count)
    opac[:n_low] = rng.uniform(0.02, 0.35, size=n_low)
    opac[n_low:] = rng.uniform(0.35, 0.98, size=count - n_low)
    rng.shuffle(opac)
    logit = np.log(opac / (1.0 - opac))

    base = np.exp(rng.normal(math.log(0.45), 0.35, size=count))
    if preset == "elongated":
        ratios = rng.uniform(10.0, 14.0, size=(count, 2))
    elif preset == "isotropic":
        ratios = np.ones((count, 2))
    else:
        iso = rng.random(count) < 0.5
        ratios = rng.uniform(2.0, 12.0, size=(count, 2))
        ratios[iso] = 1.0
    scales = np.stack([base, base / ratios[:, 0], base / ratios[:, 1]], axis=1)
    # random axis permutation per row so elongation direction varies
    perm = rng.random((count, 3)).argsort(axis=1)
    scales = np.take_along_axis(scales, perm, axis=1)

    rotations = rng.normal(size=(count, 4))  # stored unnormalized

    sh = np.zeros((count, SH_COEFFS, 3))
    sh[:, 0, :] = rng.normal(0.0, 0.35, size=(count, 3))
    sh[:, 1:, :] = rng.normal(0.0, 0.04, size=(count, SH_COEFFS - 1, 3))

    return Scene(
        means=means.astype(np.float32),
        normals=np.zeros((count, 3), dtype=np.float32),
        sh=sh.astype(np.float32),
        logit_opacities=logit.astype(np.float32),
        log_scales=np.log(scales).astype(np.float32),
        rotations=rotations.astype(np.float32),
    )
