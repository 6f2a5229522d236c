"""Synthetic silhouette rendering and midline extraction.

Stands in for the camera pipeline: a known configuration is rendered as
a dark tapered band on a light background, thresholded, and reduced to
its midline by per-row boundary averaging. Images travel as PGM files
(P5 written, P5/P2 read), midlines as CSV.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .fitting import Centerline
from .kinematics import CurvatureState, TentacleGeometry, sample_centerline

__all__ = [
    "ImageSpec",
    "GrayImage",
    "VisionError",
    "render_silhouette",
    "binarize",
    "extract_midline",
    "otsu_threshold",
    "write_pgm",
    "read_pgm",
    "midline_to_csv",
    "midline_from_csv",
]

# Band rendering levels and taper: root half-width shrinks linearly to
# 25% at the tip.
_FG_LEVEL = 25
_BG_LEVEL = 230
_TIP_TAPER = 0.25

MIDLINE_HEADER = "s,x_mm,y_mm"


class VisionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ImageSpec:
    """Frame geometry: size in px, scale in mm/px, root pixel position."""

    width: int = 960
    height: int = 560
    scale_mm_per_px: float = 0.5
    origin_px: tuple = (480.0, 40.0)    # (col, row) of the tentacle root

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("image must be at least 16x16 px")
        if self.scale_mm_per_px <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image with physical scale and root origin."""

    pixels: np.ndarray          # (height, width) uint8
    scale_mm_per_px: float
    origin_px: tuple

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 16 or px.shape[1] < 16:
            raise ValueError("pixels must be (H, W) with H, W >= 16")
        object.__setattr__(self, "pixels", px.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def _centerline_px(q: CurvatureState, geom: TentacleGeometry,
                   spec: ImageSpec, n: int):
    """Dense centerline in pixel coordinates plus per-point half-width (px)."""
    dense = TentacleGeometry(length_mm=geom.length_mm, n_samples=n,
                             root_diameter_mm=geom.root_diameter_mm)
    pts = sample_centerline(q, dense)            # (n, 2) mm, (x, y)
    s = np.linspace(0.0, 1.0, n)
    half_mm = 0.5 * geom.root_diameter_mm * (1.0 - (1.0 - _TIP_TAPER) * s)
    col = spec.origin_px[0] + pts[:, 0] / spec.scale_mm_per_px
    row = spec.origin_px[1] + pts[:, 1] / spec.scale_mm_per_px
    return col, row, half_mm / spec.scale_mm_per_px


def render_silhouette(q: CurvatureState, geom: TentacleGeometry,
                      spec: ImageSpec) -> GrayImage:
    """Render the tentacle as an anti-aliased dark band.

    The band follows the sampled centerline with a linear width taper
    from the root diameter down to 25% at the tip. Raises VisionError if
    any part of the band leaves the frame.
    """
    n = max(geom.n_samples, 600)
    col, row, half = _centerline_px(q, geom, spec, n)
    margin = half + 1.0
    bad = ((col - margin < 0) | (col + margin > spec.width - 1)
           | (row - margin < 0) | (row + margin > spec.height - 1))
    if np.any(bad):
        k = int(np.argmax(bad))
        raise VisionError(
            f"configuration leaves the frame at centerline sample {k} "
            f"(px ({col[k]:.1f}, {row[k]:.1f}), half-width {half[k]:.1f})")

    tree = cKDTree(np.column_stack([col, row]))
    # Query only the band's bounding box; the rest stays background.
    c0 = int(np.floor((col - margin).min()))
    c1 = int(np.ceil((col + margin).max())) + 1
    r0 = int(np.floor((row - margin).min()))
    r1 = int(np.ceil((row + margin).max())) + 1
    cc, rr = np.meshgrid(np.arange(c0, c1), np.arange(r0, r1))
    dist, idx = tree.query(np.column_stack([cc.ravel(), rr.ravel()]))
    # Signed distance to the band edge; 1 px linear anti-alias ramp.
    alpha = np.clip(0.5 + (half[idx] - dist), 0.0, 1.0)
    sub = _BG_LEVEL - alpha * (_BG_LEVEL - _FG_LEVEL)
    pix = np.full((spec.height, spec.width), float(_BG_LEVEL))
    pix[r0:r1, c0:c1] = sub.reshape(r1 - r0, c1 - c0)
    return GrayImage(pixels=np.round(pix).astype(np.uint8),
                     scale_mm_per_px=spec.scale_mm_per_px,
                     origin_px=spec.origin_px)


def otsu_threshold(pixels: np.ndarray) -> int:
    """Between-class-variance maximizing threshold of an 8-bit image."""
    hist = np.bincount(np.asarray(pixels, dtype=np.uint8).ravel(),
                       minlength=256).astype(float)
    total = hist.sum()
    w0 = np.cumsum(hist)
    m = np.cumsum(hist * np.arange(256))
    w1 = total - w0
    mu0 = np.where(w0 > 0, m / np.maximum(w0, 1), 0.0)
    mu1 = np.where(w1 > 0, (m[-1] - m) / np.maximum(w1, 1), 0.0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    return int(np.argmax(between))


def binarize(img: GrayImage, threshold="auto") -> np.ndarray:
    """Boolean foreground mask of pixels darker than the threshold.

    `threshold="auto"` uses Otsu's histogram criterion; a number keeps
    pixels strictly below it. An empty foreground raises VisionError.
    """
    if threshold == "auto":
        t = otsu_threshold(img.pixels)
        mask = img.pixels <= t
        if mask.all():
            raise VisionError("binarization found no background contrast")
    else:
        t = float(threshold)
        if not 0.0 <= t <= 255.0:
            raise ValueError("threshold must lie in [0, 255]")
        mask = img.pixels < t
    if not mask.any():
        raise VisionError("binarization produced an empty foreground")
    return mask


def extract_midline(mask: np.ndarray, spec: ImageSpec,
                    n_samples: int = 50,
                    max_len_mm: float | None = None) -> Centerline:
    """Midline of a binary band by per-row boundary averaging.

    Per image row, the midpoint of the leftmost and rightmost foreground
    pixels is taken; points are converted to root-relative mm and
    resampled to n uniform arc-length points starting at the root.
    Requires a single 4-connected component touching the root row.
    When the physical length is known, `max_len_mm` cuts the polyline at
    that arc length first, discarding the rounded tip cap of the band.
    The default density keeps segments long relative to the half-pixel
    midpoint quantization, which is what heading-based fitting wants.
    """
    mask = np.asarray(mask, dtype=bool)
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    labels, n_comp = ndimage.label(
        mask, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    if n_comp == 0:
        raise VisionError("mask has no foreground")
    if n_comp > 1:
        raise VisionError(f"mask has {n_comp} foreground components; "
                          "expected a single band")
    root_row = int(round(spec.origin_px[1]))
    if not mask[root_row].any():
        raise VisionError("foreground does not touch the root row")

    rows = np.flatnonzero(mask.any(axis=1))
    rows = rows[rows >= root_row]
    if len(rows) < 2:
        raise VisionError("band spans fewer than 2 rows below the root")
    if np.any(np.diff(rows) > 3):
        raise VisionError("band is discontinuous (row gap > 2)")
    cols = np.array([(np.flatnonzero(mask[r]).min()
                      + np.flatnonzero(mask[r]).max()) * 0.5 for r in rows])
    x = (cols - spec.origin_px[0]) * spec.scale_mm_per_px
    y = (rows - spec.origin_px[1]) * spec.scale_mm_per_px
    pts = np.column_stack([x, y])
    pts[0] = 0.0

    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    end = cum[-1] if max_len_mm is None else min(cum[-1], float(max_len_mm))
    target = np.linspace(0.0, end, n_samples)
    res = np.column_stack([np.interp(target, cum, pts[:, 0]),
                           np.interp(target, cum, pts[:, 1])])
    return Centerline(res)


def write_pgm(img: GrayImage, path) -> None:
    """Write the image as binary PGM (P5, maxval 255)."""
    with open(path, "wb") as f:
        f.write(f"P5\n{img.width} {img.height}\n255\n".encode())
        f.write(img.pixels.tobytes())


def read_pgm(path, scale_mm_per_px: float = 0.5,
             origin_px: tuple = (480.0, 40.0)) -> GrayImage:
    """Read a P5 or P2 PGM file; scale and origin are caller-supplied."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] not in (b"P5", b"P2"):
        raise VisionError(f"not a PGM file: {path}")
    # Header: magic, width, height, maxval, separated by whitespace and
    # optional '#' comment lines.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    w, h, maxval = tokens
    if maxval != 255:
        raise VisionError("only maxval 255 PGM is supported")
    pos += 1
    if data[:2] == b"P5":
        pix = np.frombuffer(data[pos:pos + w * h], dtype=np.uint8)
    else:
        pix = np.array(data[pos:].split(), dtype=int).astype(np.uint8)
    if pix.size != w * h:
        raise VisionError("PGM pixel payload truncated")
    return GrayImage(pixels=pix.reshape(h, w),
                     scale_mm_per_px=scale_mm_per_px, origin_px=origin_px)


def midline_to_csv(cl: Centerline, path) -> None:
    seg = np.concatenate([[0.0], np.cumsum(cl.segment_lengths)])
    s = seg / seg[-1]
    with open(path, "w") as f:
        f.write(MIDLINE_HEADER + "\n")
        for si, (x, y) in zip(s, cl.points):
            f.write(f"{si:.10g},{x:.10g},{y:.10g}\n")


def midline_from_csv(path) -> Centerline:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim != 2 or data.shape[1] != 3:
        raise VisionError(f"not a midline CSV: {path}")
    return Centerline(data[:, 1:3])
