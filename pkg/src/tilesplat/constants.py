"""Pipeline-wide constants shared by binning, intersection, and rendering."""

# Screen is processed in fixed 16x16 pixel tiles.
TILE_SIZE = 16

# Alpha threshold below which a splat contributes nothing to a pixel.
# One step of an 8-bit channel; also the default extent threshold tau.
TAU_DEFAULT = 1.0 / 255.0

# Squared Mahalanobis cutoff is capped at the three-sigma rule.
MAX_CUTOFF = 9.0

# Per-pixel alpha is capped below 1 so transmittance never hits zero.
ALPHA_CAP = 0.99

# A pixel stops compositing once its transmittance falls below this.
TRANSMITTANCE_STOP = 1e-4

# Gaussians closer than this camera-space depth are culled.
Z_NEAR_CULL = 0.2

# Low-pass dilation added to both diagonal entries of the projected
# 2D covariance (pixel^2), and the projection Jacobian clamp factor.
COV_DILATION = 0.3
FOV_CLAMP = 1.3

# Relative inflation applied to the cutoff before the exact tile test.
# Must exceed the float32 rounding error of the renderer's quadratic
# form (about 4e-7 of the largest term) so a tile rejected by the test
# can never be accumulated by the renderer; must stay well under the
# 1e-3 tolerance band used by the differential intersection tests.
CUTOFF_SLACK = 1.5e-6
