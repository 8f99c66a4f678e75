"""Per-Gaussian camera geometry: culling, covariance projection, eigenvalues.

Everything here is float32 (the whole pipeline is), vectorized over
Gaussians, and pure. Scalars work through the same code paths as length-1
arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import COV_DILATION, FOV_CLAMP, TAU_DEFAULT, Z_NEAR_CULL

_f32 = np.float32


def view_points(means, world_to_camera) -> np.ndarray:
    """Transform world points (N, 3) into camera space (N, 3), float32."""
    m = world_to_camera.astype(np.float32)
    x, y, z = (means[:, i].astype(np.float32) for i in range(3))
    out = np.empty((means.shape[0], 3), dtype=np.float32)
    for r in range(3):
        out[:, r] = m[r, 0] * x + m[r, 1] * y + m[r, 2] * z + m[r, 3]
    return out


def project_points(means, full_projection) -> np.ndarray:
    """Apply the 4x4 projection to world points, returning (N, 4) clip coords."""
    m = full_projection.astype(np.float32)
    x, y, z = (means[:, i].astype(np.float32) for i in range(3))
    out = np.empty((means.shape[0], 4), dtype=np.float32)
    for r in range(4):
        out[:, r] = m[r, 0] * x + m[r, 1] * y + m[r, 2] * z + m[r, 3]
    return out


def frustum_mask(view_z, opacities, tau=TAU_DEFAULT) -> np.ndarray:
    """Keep Gaussians in front of the near cull plane with visible opacity.

    The opacity part of the test lives in preprocessing rather than in the
    per-pixel loop; the threshold is the shared pipeline tau (and never
    below one 8-bit step).
    """
    thresh = _f32(max(tau, 1.0 / 255.0))
    return (view_z > _f32(Z_NEAR_CULL)) & (opacities > thresh)


def frustum_cull(mean, opacity, camera, tau=TAU_DEFAULT):
    """Single-Gaussian contract: camera-space point if retained, else None."""
    p = view_points(np.asarray(mean, dtype=np.float32).reshape(1, 3),
                    camera.world_to_camera)
    if frustum_mask(p[:, 2], np.asarray([opacity], dtype=np.float32), tau)[0]:
        return p[0]
    return None


def quat_to_rotmat(q) -> np.ndarray:
    """Unit quaternions (N, 4) as (w, x, y, z) to rotation matrices (N, 3, 3)."""
    q = q.astype(np.float32)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    n = q.shape[0]
    r = np.empty((n, 3, 3), dtype=np.float32)
    two = _f32(2.0)
    one = _f32(1.0)
    r[:, 0, 0] = one - two * (y * y + z * z)
    r[:, 0, 1] = two * (x * y - w * z)
    r[:, 0, 2] = two * (x * z + w * y)
    r[:, 1, 0] = two * (x * y + w * z)
    r[:, 1, 1] = one - two * (x * x + z * z)
    r[:, 1, 2] = two * (y * z - w * x)
    r[:, 2, 0] = two * (x * z - w * y)
    r[:, 2, 1] = two * (y * z + w * x)
    r[:, 2, 2] = one - two * (x * x + y * y)
    return r


def compute_cov3d(scales, rotations) -> np.ndarray:
    """World-space covariance R S S^T R^T, (N, 3, 3) float32."""
    scales = np.atleast_2d(np.asarray(scales, dtype=np.float32))
    rotations = np.atleast_2d(np.asarray(rotations, dtype=np.float32))
    r = quat_to_rotmat(rotations)
    m = r * scales[:, None, :]  # R @ diag(s)
    return np.einsum("nij,nkj->nik", m, m)


def compute_cov2d(means, cov3d, camera) -> np.ndarray:
    """Project world covariances to pixel space, packed (N, 3) as (xx, xy, yy).

    Perspective Jacobian with the view-cone clamp, then the low-pass
    dilation on the diagonal.
    """
    means = np.atleast_2d(np.asarray(means, dtype=np.float32))
    cov3d = np.asarray(cov3d, dtype=np.float32).reshape(-1, 3, 3)
    t = view_points(means, camera.world_to_camera)
    # guarded depth so culled rows do not divide by ~0 (they are masked later)
    tz = np.where(t[:, 2] > _f32(1e-3), t[:, 2], _f32(1e-3))
    limx = _f32(FOV_CLAMP * camera.tan_fovx)
    limy = _f32(FOV_CLAMP * camera.tan_fovy)
    tx = np.clip(t[:, 0] / tz, -limx, limx) * tz
    ty = np.clip(t[:, 1] / tz, -limy, limy) * tz
    fx = _f32(camera.focal_x)
    fy = _f32(camera.focal_y)
    inv_z = _f32(1.0) / tz
    inv_z2 = inv_z * inv_z
    n = means.shape[0]
    jac = np.zeros((n, 2, 3), dtype=np.float32)
    jac[:, 0, 0] = fx * inv_z
    jac[:, 0, 2] = -(fx * tx) * inv_z2
    jac[:, 1, 1] = fy * inv_z
    jac[:, 1, 2] = -(fy * ty) * inv_z2
    w = camera.world_to_camera[:3, :3].astype(np.float32)
    tmat = np.einsum("nij,jk->nik", jac, w)
    m = np.einsum("nij,njk->nik", tmat, cov3d)
    cov = np.einsum("nij,nkj->nik", m, tmat)
    packed = np.empty((n, 3), dtype=np.float32)
    packed[:, 0] = cov[:, 0, 0] + _f32(COV_DILATION)
    packed[:, 1] = cov[:, 0, 1]
    packed[:, 2] = cov[:, 1, 1] + _f32(COV_DILATION)
    return packed


def eigenvalues_2x2(cov):
    """Eigenvalues (lam1 >= lam2) of symmetric 2x2, packed (xx, xy, yy) input.

    mid +- sqrt(max(0, mid^2 - det)) with float64 intermediates (the
    subtraction cancels catastrophically in float32 for thin ellipses),
    rounded once to float32.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float32)).astype(np.float64)
    a, b, c = cov[:, 0], cov[:, 1], cov[:, 2]
    mid = 0.5 * (a + c)
    det = a * c - b * b
    disc = np.sqrt(np.maximum(mid * mid - det, 0.0))
    return (mid + disc).astype(np.float32), (mid - disc).astype(np.float32)


def conic_from_cov2d(cov):
    """Invert packed covariances: (conic packed (N, 3), det, valid mask).

    The conic is the adjugate divided by the determinant; rows with
    det <= 0 are flagged invalid (dropped and counted upstream).
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float32))
    a, b, c = cov[:, 0], cov[:, 1], cov[:, 2]
    det = a * c - b * b
    valid = det > 0
    safe = np.where(valid, det, _f32(1.0))
    inv = _f32(1.0) / safe
    conic = np.empty_like(cov)
    conic[:, 0] = c * inv
    conic[:, 1] = -b * inv
    conic[:, 2] = a * inv
    return conic, det, valid


def ndc2pix(p_clip, width, height) -> np.ndarray:
    """Clip coords (N, 4) to pixel centers (N, 2).

    The divide is guarded; a |w| below 1e-7 produces a huge coordinate,
    which only happens for Gaussians the frustum cull already removed.
    """
    p_clip = np.atleast_2d(np.asarray(p_clip, dtype=np.float32))
    w = p_clip[:, 3]
    denom = np.where(np.abs(w) > _f32(1e-7), w, _f32(1e-7))
    out = np.empty((p_clip.shape[0], 2), dtype=np.float32)
    for axis, size in ((0, width), (1, height)):
        ndc = p_clip[:, axis] / denom
        out[:, axis] = ((ndc + _f32(1.0)) * _f32(size) - _f32(1.0)) * _f32(0.5)
    return out


@dataclass
class ProjectedGaussians:
    """Per-Gaussian screen-space quantities for one camera (all float32)."""

    retained: np.ndarray      # (N,) bool, frustum + opacity + valid conic
    degenerate: np.ndarray    # (N,) bool, det <= 0 after dilation
    pixel_center: np.ndarray  # (N, 2)
    depth: np.ndarray         # (N,) camera-space z
    cov2d: np.ndarray         # (N, 3) packed (xx, xy, yy)
    conic: np.ndarray         # (N, 3) packed (a, b, c)
    lam1: np.ndarray          # (N,) larger eigenvalue
    lam2: np.ndarray          # (N,)


def project_gaussians(act, camera, tau=TAU_DEFAULT) -> ProjectedGaussians:
    """Full per-Gaussian geometry pass for one camera (no tile work yet)."""
    p_view = view_points(act.means, camera.world_to_camera)
    in_view = frustum_mask(p_view[:, 2], act.opacities, tau)
    cov3d = compute_cov3d(act.scales, act.rotations)
    cov2d = compute_cov2d(act.means, cov3d, camera)
    conic, det, valid = conic_from_cov2d(cov2d)
    lam1, lam2 = eigenvalues_2x2(cov2d)
    pix = ndc2pix(project_points(act.means, camera.full_projection),
                  camera.width, camera.height)
    degenerate = in_view & ~valid
    return ProjectedGaussians(
        retained=in_view & valid,
        degenerate=degenerate,
        pixel_center=pix,
        depth=p_view[:, 2],
        cov2d=cov2d,
        conic=conic,
        lam1=lam1,
        lam2=lam2,
    )
