"""Image export: bit-exact PPM for tests, PNG for humans.

Quantization is round-half-away-from-zero on the [0, 1] clipped linear
channels: q = floor(c * 255 + 0.5).
"""

from __future__ import annotations

import numpy as np


def quantize(image: np.ndarray) -> np.ndarray:
    """float32 (H, W, 3) linear -> uint8, round half away from zero."""
    c = np.clip(image.astype(np.float64), 0.0, 1.0)
    return np.floor(c * 255.0 + 0.5).astype(np.uint8)


def write_ppm(image: np.ndarray, path) -> None:
    """Binary P6, maxval 255; the canonical bit-exact output format."""
    q = quantize(image)
    h, w = q.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(q.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read back a P6 file written by :func:`write_ppm` (tests use this)."""
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P6":
            raise ValueError(f"not a P6 PPM: {magic!r}")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        maxval = int(f.readline())
        if maxval != 255:
            raise ValueError(f"unsupported maxval {maxval}")
        data = f.read(w * h * 3)
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)


def write_png(image: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(quantize(image), mode="RGB").save(path, format="PNG")


def png_bytes(image: np.ndarray) -> bytes:
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(quantize(image), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
