"""Opacity-aware effective extents and their mapping onto the tile grid.

The boundary of a splat is where its alpha decays to the shared threshold
tau: alpha0 * exp(-q/2) = tau at squared Mahalanobis distance
q = k = 2*ln(alpha0/tau), capped at 9 (the three-sigma rule keeps the cap
for high opacities). Working in cutoff space applies the rule once per
Gaussian; the radius along a principal axis is recovered as sqrt(k*lambda).
"""

from __future__ import annotations

import numpy as np

from .constants import MAX_CUTOFF, TAU_DEFAULT, TILE_SIZE

_f32 = np.float32


def power_cutoffs(alpha0, tau=TAU_DEFAULT):
    """Vectorized cutoff: (k float32 array, keep mask).

    Gaussians at or below tau are culled. The log runs in float64 and is
    rounded once to float32 so the cap crossover sits as close to
    alpha0 = tau * e^4.5 as float32 allows.
    """
    alpha0 = np.atleast_1d(np.asarray(alpha0, dtype=np.float32))
    keep = alpha0 > _f32(tau)
    safe = np.where(keep, alpha0, _f32(1.0)).astype(np.float64)
    k = np.minimum(2.0 * np.log(safe / float(tau)), MAX_CUTOFF).astype(np.float32)
    return k, keep


def power_cutoff(alpha0, tau=TAU_DEFAULT):
    """Single-Gaussian contract: cutoff k in (0, 9], or None when culled."""
    k, keep = power_cutoffs(alpha0, tau)
    return float(k[0]) if keep[0] else None


def tight_aabb(center, cov2d, k):
    """Exact axis-aligned bounding rectangle of the cutoff ellipse.

    Half extents are sqrt(k * diagonal): the AABB of
    {d : d^T cov2d^-1 d = k} is bounded by the covariance diagonal even for
    rotated ellipses. Returns (xmin, ymin, xmax, ymax), float32 arrays.
    """
    center = np.atleast_2d(np.asarray(center, dtype=np.float32))
    cov2d = np.atleast_2d(np.asarray(cov2d, dtype=np.float32))
    k = np.atleast_1d(np.asarray(k, dtype=np.float32))
    hx = np.sqrt(k * cov2d[:, 0])
    hy = np.sqrt(k * cov2d[:, 2])
    return (center[:, 0] - hx, center[:, 1] - hy,
            center[:, 0] + hx, center[:, 1] + hy)


def baseline_radius(lam1):
    """Reference circle radius: ceil(3 * sqrt(largest eigenvalue))."""
    lam1 = np.atleast_1d(np.asarray(lam1, dtype=np.float32))
    return np.ceil(_f32(3.0) * np.sqrt(np.maximum(lam1, _f32(0.0))))


def baseline_aabb(center, lam1):
    """Square box of the circle enclosing the ellipse (the control arm)."""
    center = np.atleast_2d(np.asarray(center, dtype=np.float32))
    r = baseline_radius(lam1)
    return (center[:, 0] - r, center[:, 1] - r,
            center[:, 0] + r, center[:, 1] + r)


def tile_ranges(xmin, ymin, xmax, ymax, grid_w, grid_h):
    """Map pixel rectangles to inclusive tile ranges, clamped to the grid.

    Returns (tx0, ty0, tx1, ty1) int32 arrays plus a nonempty mask;
    rectangles that miss the screen entirely are flagged empty.
    """
    ts = float(TILE_SIZE)
    tx0 = np.floor(np.asarray(xmin, dtype=np.float64) / ts)
    ty0 = np.floor(np.asarray(ymin, dtype=np.float64) / ts)
    tx1 = np.floor(np.asarray(xmax, dtype=np.float64) / ts)
    ty1 = np.floor(np.asarray(ymax, dtype=np.float64) / ts)
    nonempty = (tx1 >= 0) & (ty1 >= 0) & (tx0 <= grid_w - 1) & (ty0 <= grid_h - 1)
    tx0 = np.clip(tx0, 0, grid_w - 1).astype(np.int32)
    ty0 = np.clip(ty0, 0, grid_h - 1).astype(np.int32)
    tx1 = np.clip(tx1, 0, grid_w - 1).astype(np.int32)
    ty1 = np.clip(ty1, 0, grid_h - 1).astype(np.int32)
    return tx0, ty0, tx1, ty1, nonempty


def tile_range(rect, grid_w, grid_h):
    """Single-rectangle contract: ((tx0, ty0), (tx1, ty1)) or None if empty."""
    xmin, ymin, xmax, ymax = rect
    tx0, ty0, tx1, ty1, ok = tile_ranges(
        np.asarray([xmin]), np.asarray([ymin]),
        np.asarray([xmax]), np.asarray([ymax]), grid_w, grid_h)
    if not ok[0]:
        return None
    return (int(tx0[0]), int(ty0[0])), (int(tx1[0]), int(ty1[0]))
