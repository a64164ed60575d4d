"""Raster operations for the lane pipeline.

Images are numpy uint8 arrays: grayscale (h, w), color (h, w, 3), binary
masks (h, w) restricted to {0, 255}. All filters use clamp-to-edge borders
and keep dimensions; only `downsample` changes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import InsufficientDataError

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class HoughParams:
    """Probabilistic Hough parameters (pixel/radian units)."""

    rho_res: float = 1.0
    theta_res: float = math.pi / 180.0
    accumulator_threshold: int = 8
    min_line_length: float = 2.0
    max_line_gap: float = 25.0

    def __post_init__(self):
        if min(self.rho_res, self.theta_res, self.accumulator_threshold,
               self.min_line_length, self.max_line_gap) <= 0:
            raise ValueError("all Hough parameters must be positive")


@dataclass(frozen=True)
class LineSegment:
    x1: int
    y1: int
    x2: int
    y2: int

    @property
    def vertical(self) -> bool:
        return self.x1 == self.x2

    @property
    def slope(self) -> float:
        if self.vertical:
            return math.inf
        return (self.y2 - self.y1) / (self.x2 - self.x1)

    @property
    def length(self) -> float:
        return math.hypot(self.x2 - self.x1, self.y2 - self.y1)

    @property
    def midpoint(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0


def validate_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-d grayscale image, got shape {img.shape}")
    return img.astype(np.uint8, copy=False)


def validate_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) color image, got shape {img.shape}")
    return img.astype(np.uint8, copy=False)


def validate_mask(mask: np.ndarray) -> np.ndarray:
    mask = validate_gray(mask)
    if not np.isin(mask, (0, 255)).all():
        raise ValueError("mask values must be 0 or 255")
    return mask


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luminance conversion round(0.299 R + 0.587 G + 0.114 B)."""
    img = validate_rgb(img).astype(np.float64)
    gray = GRAY_WEIGHTS[0] * img[..., 0] + GRAY_WEIGHTS[1] * img[..., 1] + GRAY_WEIGHTS[2] * img[..., 2]
    return np.rint(gray).clip(0, 255).astype(np.uint8)


def chromaticity(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized color planes r, g, b = C / (R+G+B), scaled to [0, 255].

    Pixels with zero channel sum map to the uniform chromaticity (85, 85, 85).
    """
    img = validate_rgb(img).astype(np.float64)
    total = img.sum(axis=2)
    safe = np.where(total == 0, 1.0, total)
    planes = []
    for c in range(3):
        plane = np.rint(255.0 * img[..., c] / safe)
        plane[total == 0] = 85
        planes.append(plane.clip(0, 255).astype(np.uint8))
    return planes[0], planes[1], planes[2]


def downsample(img: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean downsampling; output dims are floor(dims / factor)."""
    img = validate_gray(img)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    h, w = img.shape
    if factor > min(h, w):
        raise ValueError(f"factor {factor} exceeds the smallest image dimension")
    if factor == 1:
        return img.copy()
    hh, ww = h // factor, w // factor
    blocks = img[: hh * factor, : ww * factor].astype(np.float64)
    blocks = blocks.reshape(hh, factor, ww, factor).mean(axis=(1, 3))
    return np.rint(blocks).clip(0, 255).astype(np.uint8)


def _shift_stack_3x3(img: np.ndarray) -> np.ndarray:
    """All nine 3x3-neighborhood views of img with clamped borders, stacked."""
    padded = np.pad(img, 1, mode="edge")
    h, w = img.shape
    return np.stack(
        [padded[dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3)]
    )


def median_filter(img: np.ndarray, iterations: int = 30) -> np.ndarray:
    """Iterated 3x3 median smoothing with clamped borders."""
    img = validate_gray(img)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    out = img
    for _ in range(iterations):
        out = np.median(_shift_stack_3x3(out), axis=0).astype(np.uint8)
    return out.copy() if iterations == 0 else out


def gaussian_kernel(ksize: int, sigma: float) -> np.ndarray:
    """Normalized 1-d Gaussian; sigma = 0 derives it from the kernel size."""
    if ksize % 2 == 0 or ksize < 1:
        raise ValueError(f"kernel size must be odd and positive, got {ksize}")
    if sigma <= 0:
        sigma = 0.3 * ((ksize - 1) * 0.5 - 1) + 0.8
    half = ksize // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * sigma**2))
    return k / k.sum()


def _convolve_rows(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    half = len(kernel) // 2
    padded = np.pad(img, ((0, 0), (half, half)), mode="edge")
    w = img.shape[1]
    out = np.zeros_like(img, dtype=np.float64)
    for j, kj in enumerate(kernel):
        out += kj * padded[:, j:j + w]
    return out


def gaussian_blur(img: np.ndarray, ksize: int = 5, sigma: float = 0.0) -> np.ndarray:
    """Separable Gaussian smoothing with clamped borders."""
    img = validate_gray(img).astype(np.float64)
    k = gaussian_kernel(ksize, sigma)
    out = _convolve_rows(img, k)
    out = _convolve_rows(out.T, k).T
    return np.rint(out).clip(0, 255).astype(np.uint8)


def sobel_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal and vertical Sobel derivatives (clamped borders, float)."""
    img = validate_gray(img).astype(np.float64)
    s = _shift_stack_3x3(img)
    # stack index = 3*dy + dx with offsets in {0,1,2}
    gx = (s[2] + 2 * s[5] + s[8]) - (s[0] + 2 * s[3] + s[6])
    gy = (s[6] + 2 * s[7] + s[8]) - (s[0] + 2 * s[1] + s[2])
    return gx, gy


def canny(img: np.ndarray, low: float = 50.0, high: float = 175.0) -> np.ndarray:
    """Canny edges: Sobel, non-maximum suppression, hysteresis. Returns {0,255}."""
    if low >= high:
        raise ValueError(f"low threshold {low} must be below high threshold {high}")
    img = validate_gray(img)
    gx, gy = sobel_gradients(img)
    mag = np.hypot(gx, gy)
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0

    h, w = img.shape
    padded = np.pad(mag, 1, mode="constant")

    def neighbor(dy: int, dx: int) -> np.ndarray:
        return padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]

    sector_neighbors = [
        ((0, 1), (0, -1)),    # gradient ~ horizontal
        ((1, -1), (-1, 1)),   # gradient ~ 45 degrees
        ((1, 0), (-1, 0)),    # gradient ~ vertical
        ((1, 1), (-1, -1)),   # gradient ~ 135 degrees
    ]
    sector = np.zeros_like(angle, dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    keep = np.zeros((h, w), dtype=bool)
    for idx, ((fy, fx), (by, bx)) in enumerate(sector_neighbors):
        sel = sector == idx
        # ties break to one side so plateaus thin to a single pixel
        keep |= sel & (mag >= neighbor(fy, fx)) & (mag > neighbor(by, bx))
    keep &= mag > 0

    strong = keep & (mag >= high)
    weak = keep & (mag >= low) & (mag < high)

    # hysteresis: breadth-first growth from strong pixels through weak ones
    edges = strong.copy()
    stack = list(zip(*np.nonzero(strong)))
    while stack:
        y, x = stack.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] and not edges[ny, nx]:
                    edges[ny, nx] = True
                    stack.append((ny, nx))
    return np.where(edges, 255, 0).astype(np.uint8)


def polygon_mask(shape: tuple[int, int], polygon: list[tuple[float, float]]) -> np.ndarray:
    """Boolean inside-test (even-odd rule, boundary inclusive) on pixel centers."""
    if len(polygon) < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    inside = np.zeros(shape, dtype=bool)
    on_edge = np.zeros(shape, dtype=bool)
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        crosses = (y1 > ys) != (y2 > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = np.where(crosses, (x2 - x1) * (ys - y1) / (y2 - y1 + 1e-300) + x1, np.inf)
        inside ^= crosses & (xs < x_at)
        # distance from pixel center to the segment, for boundary inclusion
        ex, ey = x2 - x1, y2 - y1
        seg_len2 = ex * ex + ey * ey
        if seg_len2 == 0:
            dist2 = (xs - x1) ** 2 + (ys - y1) ** 2
        else:
            t = ((xs - x1) * ex + (ys - y1) * ey) / seg_len2
            t = np.clip(t, 0.0, 1.0)
            dist2 = (xs - (x1 + t * ex)) ** 2 + (ys - (y1 + t * ey)) ** 2
        on_edge |= dist2 <= 0.25
    return inside | on_edge


def roi_mask(img: np.ndarray, polygon: list[tuple[float, float]]) -> np.ndarray:
    """Zero all pixels outside the polygon; type and dimensions preserved."""
    img = validate_gray(img)
    keep = polygon_mask(img.shape, polygon)
    return np.where(keep, img, 0).astype(np.uint8)


def default_roi(width: int, height: int) -> list[tuple[float, float]]:
    """Road-area polygon: bottom corners up to the (80, 380)-(380, 380) line."""
    return [(0, height), (80, 380), (380, 380), (width, height)]


def hough_segments(
    edges: np.ndarray,
    params: HoughParams | None = None,
    seed: int | None = None,
) -> list[LineSegment]:
    """Probabilistic Hough transform emitting line segments.

    Edge pixels vote over all theta bins in a seeded random order. Once a
    pixel's best accumulator cell reaches the threshold, the line through it
    is walked in both directions collecting edge pixels with gaps up to
    max_line_gap; runs at least min_line_length long are emitted and their
    pixels removed (votes withdrawn).
    """
    edges = validate_mask(edges)
    if params is None:
        params = HoughParams()
    h, w = edges.shape
    ys, xs = np.nonzero(edges)
    if len(xs) == 0:
        return []

    n_theta = max(1, int(round(math.pi / params.theta_res)))
    thetas = np.arange(n_theta) * params.theta_res
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    diag = math.hypot(h, w)
    n_rho = int(2 * diag / params.rho_res) + 3
    offset = diag / params.rho_res

    acc = np.zeros((n_rho, n_theta), dtype=np.int32)
    alive = np.zeros((h, w), dtype=bool)
    alive[ys, xs] = True
    voted = np.zeros((h, w), dtype=bool)

    def rho_bins(x: int, y: int) -> np.ndarray:
        return np.rint((x * cos_t + y * sin_t) / params.rho_res + offset).astype(np.int64)

    def walk(x0: int, y0: int, vx: float, vy: float) -> list[tuple[int, int]]:
        """Collect alive edge pixels along one ray until the gap limit."""
        hits = []
        gap = 0
        t = 1
        while True:
            px, py = int(round(x0 + t * vx)), int(round(y0 + t * vy))
            if not (0 <= px < w and 0 <= py < h):
                break
            if alive[py, px]:
                hits.append((px, py))
                gap = 0
            else:
                gap += 1
                if gap > params.max_line_gap:
                    break
            t += 1
        return hits

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(xs))
    segments: list[LineSegment] = []

    for i in order:
        x0, y0 = int(xs[i]), int(ys[i])
        if not alive[y0, x0]:
            continue
        bins = rho_bins(x0, y0)
        acc[bins, np.arange(n_theta)] += 1
        voted[y0, x0] = True
        counts = acc[bins, np.arange(n_theta)]
        k = int(np.argmax(counts))
        if counts[k] < params.accumulator_threshold:
            continue

        vx, vy = -sin_t[k], cos_t[k]
        forward = walk(x0, y0, vx, vy)
        backward = walk(x0, y0, -vx, -vy)
        hits = backward[::-1] + [(x0, y0)] + forward
        x1, y1 = hits[0]
        x2, y2 = hits[-1]
        if math.hypot(x2 - x1, y2 - y1) < params.min_line_length:
            # too short: retire the seed pixel so the scan makes progress
            alive[y0, x0] = False
            continue
        for px, py in hits:
            if voted[py, px]:
                acc[rho_bins(px, py), np.arange(n_theta)] -= 1
                voted[py, px] = False
            alive[py, px] = False
        segments.append(LineSegment(x1=x1, y1=y1, x2=x2, y2=y2))

    return segments


def read_image(path) -> np.ndarray:
    """Load a PNG or PGM/PPM file as uint8 grayscale or color."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_image(path, img: np.ndarray) -> None:
    """Save uint8 grayscale or color as PNG or PGM/PPM (chosen by extension)."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim == 2:
        pil = Image.fromarray(img, mode="L")
    else:
        pil = Image.fromarray(validate_rgb(img), mode="RGB")
    pil.save(path)
