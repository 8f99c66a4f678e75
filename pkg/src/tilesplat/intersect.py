"""Exact ellipse-tile intersection via the chord/segment-overlap reduction.

A tile needs a splat iff the cutoff ellipse {d : d^T conic d <= k} meets
the tile rectangle. That holds exactly when the ellipse center lies in the
rectangle, or the chord the ellipse cuts on one of the four edge lines
overlaps that edge segment. The chord endpoints are roots of a quadratic;
the overlap test is rearranged so no division or square root is needed:
with e1 = 2*A*a_i + B and e2 = 2*A*b_i + B,

    overlap  <=>  (e1 <= 0 or e1^2 <= Delta) and (e2 >= 0 or e2^2 <= Delta)

for A > 0 and Delta = B^2 - 4*A*C >= 0.

Predicate arithmetic runs in float64 on the float32 pipeline values; the
caller adds a small conservative slack to the cutoff (see constants) so a
rejected tile can never be accumulated by the float32 renderer. Ties
resolve to "intersects".
"""

from __future__ import annotations

import numpy as np


def chord_overlaps_segment(A, B, C, a_i, b_i):
    """True where the root interval of A X^2 + B X + C = 0 meets [a_i, b_i].

    Division- and square-root-free; requires A > 0 and a_i <= b_i.
    Vectorized; scalar inputs return a scalar bool.
    """
    scalar = np.isscalar(A) or (np.ndim(A) == 0)
    A = np.atleast_1d(np.asarray(A, dtype=np.float64))
    B = np.atleast_1d(np.asarray(B, dtype=np.float64))
    C = np.atleast_1d(np.asarray(C, dtype=np.float64))
    a_i = np.atleast_1d(np.asarray(a_i, dtype=np.float64))
    b_i = np.atleast_1d(np.asarray(b_i, dtype=np.float64))
    delta = B * B - 4.0 * A * C
    e1 = 2.0 * A * a_i + B
    e2 = 2.0 * A * b_i + B
    out = (delta >= 0.0) \
        & ((e1 <= 0.0) | (e1 * e1 <= delta)) \
        & ((e2 >= 0.0) | (e2 * e2 <= delta))
    return bool(out[0]) if scalar else out


def chord_overlaps_segment_roots(A, B, C, a_i, b_i):
    """Reference form of the same predicate with explicit roots (tests only)."""
    scalar = np.isscalar(A) or (np.ndim(A) == 0)
    A = np.atleast_1d(np.asarray(A, dtype=np.float64))
    B = np.atleast_1d(np.asarray(B, dtype=np.float64))
    C = np.atleast_1d(np.asarray(C, dtype=np.float64))
    a_i = np.atleast_1d(np.asarray(a_i, dtype=np.float64))
    b_i = np.atleast_1d(np.asarray(b_i, dtype=np.float64))
    delta = B * B - 4.0 * A * C
    ok = delta >= 0.0
    sq = np.sqrt(np.where(ok, delta, 0.0))
    lo = (-B - sq) / (2.0 * A)
    hi = (-B + sq) / (2.0 * A)
    out = ok & (a_i <= hi) & (b_i >= lo)
    return bool(out[0]) if scalar else out


def tiles_intersect_ellipse(x0, y0, x1, y1, cx, cy, a, b, c, k):
    """Vectorized rectangle-vs-ellipse test; all arguments broadcastable.

    Rectangles are [x0, x1] x [y0, y1]; the ellipse is
    {(x, y) : q(x - cx, y - cy) <= k} for the packed conic (a, b, c).
    Coefficients are formed in center-relative coordinates.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    y1 = np.asarray(y1, dtype=np.float64)
    cx = np.asarray(cx, dtype=np.float64)
    cy = np.asarray(cy, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)

    u0 = x0 - cx
    u1 = x1 - cx
    v0 = y0 - cy
    v1 = y1 - cy
    center_in = (u0 <= 0.0) & (u1 >= 0.0) & (v0 <= 0.0) & (v1 >= 0.0)

    hit = center_in
    # horizontal edge lines y = v: quadratic in the x offset
    for v in (v0, v1):
        hit = hit | chord_overlaps_segment(a, 2.0 * b * v, c * v * v - k, u0, u1)
    # vertical edge lines x = u: quadratic in the y offset
    for u in (u0, u1):
        hit = hit | chord_overlaps_segment(c, 2.0 * b * u, a * u * u - k, v0, v1)
    return hit


def tile_intersects_ellipse(tile_rect, center, conic, k) -> bool:
    """Single-tile contract wrapper around the vectorized test."""
    x0, y0, x1, y1 = tile_rect
    cx, cy = center
    a, b, c = conic
    out = tiles_intersect_ellipse(
        np.asarray([x0]), np.asarray([y0]), np.asarray([x1]), np.asarray([y1]),
        np.asarray([cx]), np.asarray([cy]),
        np.asarray([a]), np.asarray([b]), np.asarray([c]), np.asarray([k]))
    return bool(out[0])


def oracle_intersects(tile_rect, center, conic, k, resolution=64) -> bool:
    """Dense-grid membership oracle; test harness only, never the pipeline."""
    if resolution < 64:
        raise ValueError("oracle resolution must be at least 64")
    x0, y0, x1, y1 = (float(v) for v in tile_rect)
    cx, cy = (float(v) for v in center)
    a, b, c = (float(v) for v in conic)
    xs = np.linspace(x0, x1, resolution) - cx
    ys = np.linspace(y0, y1, resolution) - cy
    u, v = np.meshgrid(xs, ys)
    q = a * u * u + 2.0 * b * u * v + c * v * v
    return bool(np.any(q <= float(k)))


def min_mahalanobis_on_rect(tile_rect, center, conic) -> float:
    """Exact minimum of the quadratic form over a rectangle (float64).

    Zero when the center is inside; otherwise the minimum over the four
    edges, each a 1D quadratic minimized in closed form. Used by tests to
    measure how close a configuration is to tangency.
    """
    x0, y0, x1, y1 = (float(v) for v in tile_rect)
    cx, cy = (float(v) for v in center)
    a, b, c = (float(v) for v in conic)
    u0, u1 = x0 - cx, x1 - cx
    v0, v1 = y0 - cy, y1 - cy
    if u0 <= 0.0 <= u1 and v0 <= 0.0 <= v1:
        return 0.0

    def q(u, v):
        return a * u * u + 2.0 * b * u * v + c * v * v

    best = np.inf
    for v in (v0, v1):  # edges at fixed v, u in [u0, u1]
        u_star = min(max(-b * v / a, u0), u1)
        best = min(best, q(u_star, v))
    for u in (u0, u1):  # edges at fixed u, v in [v0, v1]
        v_star = min(max(-b * u / c, v0), v1)
        best = min(best, q(u, v_star))
    return float(best)
