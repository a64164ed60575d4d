"""Shadow detection: grid partition, per-cell overlap classification,
mask refinement, and shadow replacement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imaging import median_filter, polygon_mask, validate_gray, validate_mask
from .overlap import Centroid, overlap, overlap_analytic


@dataclass(frozen=True)
class GridCell:
    row: int
    col: int
    midpoint_value: float
    mean_value: float


@dataclass(frozen=True)
class SubmatrixGrid:
    grid_n: int
    cells: list[GridCell]

    def feature_matrix(self, feature: str = "midpoint") -> np.ndarray:
        if feature not in ("midpoint", "mean"):
            raise ValueError(f"feature must be 'midpoint' or 'mean', got {feature!r}")
        attr = "midpoint_value" if feature == "midpoint" else "mean_value"
        out = np.empty((self.grid_n, self.grid_n), dtype=np.float64)
        for cell in self.cells:
            out[cell.row, cell.col] = getattr(cell, attr)
        return out


@dataclass(frozen=True)
class MaskProvenance:
    centroid_theta: float
    threshold: float
    kind: str
    grid_n: int
    seed: int | None
    feature: str


@dataclass(frozen=True)
class ShadowMask:
    mask: np.ndarray
    provenance: MaskProvenance


def grid_edges(dim: int, grid_n: int) -> np.ndarray:
    """Block boundaries splitting `dim` pixels into `grid_n` near-equal blocks.

    Remainder pixels go to the trailing blocks, so block sizes differ by at
    most one and later blocks are the larger ones.
    """
    if grid_n < 1 or grid_n > dim:
        raise ValueError(f"grid_n must be in [1, {dim}], got {grid_n}")
    base, rem = divmod(dim, grid_n)
    sizes = np.full(grid_n, base, dtype=np.int64)
    if rem:
        sizes[-rem:] += 1
    edges = np.zeros(grid_n + 1, dtype=np.int64)
    np.cumsum(sizes, out=edges[1:])
    return edges


def partition(img: np.ndarray, grid_n: int) -> SubmatrixGrid:
    """Split the image into grid_n x grid_n blocks, recording per-block
    midpoint (central pixel, upper-left of center for even blocks) and mean."""
    img = validate_gray(img)
    h, w = img.shape
    if grid_n > min(h, w):
        raise ValueError(f"grid_n {grid_n} exceeds the smallest image dimension {min(h, w)}")
    row_edges = grid_edges(h, grid_n)
    col_edges = grid_edges(w, grid_n)
    cells = []
    for r in range(grid_n):
        r0, r1 = row_edges[r], row_edges[r + 1]
        mid_r = r0 + (r1 - r0 - 1) // 2
        for c in range(grid_n):
            c0, c1 = col_edges[c], col_edges[c + 1]
            mid_c = c0 + (c1 - c0 - 1) // 2
            block = img[r0:r1, c0:c1]
            cells.append(
                GridCell(
                    row=r,
                    col=c,
                    midpoint_value=float(img[mid_r, mid_c]),
                    mean_value=float(block.mean()),
                )
            )
    return SubmatrixGrid(grid_n=grid_n, cells=cells)


def classify_grid(
    features: np.ndarray,
    centroid: Centroid,
    threshold: float,
    shots: int = 0,
    seed: int | None = None,
) -> np.ndarray:
    """Boolean shadow decisions for a matrix of feature values."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    thetas = np.asarray(features, dtype=np.float64) * (math.pi / 180.0)
    if shots == 0:
        overlaps = np.abs(np.cos((thetas - centroid.theta) / 2.0))
        return overlaps >= threshold
    flat = thetas.reshape(-1)
    out = np.zeros(flat.shape, dtype=bool)
    base = 0 if seed is None else seed
    for i, theta in enumerate(flat):
        # per-cell derived seed keeps sampled runs reproducible
        result = overlap(theta, centroid.theta, shots=shots, seed=base + i)
        out[i] = result.inner_product >= threshold
    return out.reshape(thetas.shape)


def refine(shadow_cells: np.ndarray) -> np.ndarray:
    """One propagation pass over the cell grid: clear isolated shadow cells
    (no 4-neighbor shadow) and fill holes (non-shadow with >= 3 shadow
    neighbors). Cells beyond the border count as non-shadow."""
    s = np.asarray(shadow_cells, dtype=bool)
    padded = np.pad(s, 1, mode="constant")
    neighbor_count = (
        padded[:-2, 1:-1].astype(np.int8)
        + padded[2:, 1:-1]
        + padded[1:-1, :-2]
        + padded[1:-1, 2:]
    )
    out = s.copy()
    out[s & (neighbor_count == 0)] = False
    out[~s & (neighbor_count >= 3)] = True
    return out


def detect(
    img: np.ndarray,
    centroid: Centroid,
    threshold: float,
    grid_n: int,
    shots: int = 0,
    seed: int | None = None,
    feature: str = "midpoint",
    kind: str = "intensity",
    refine_mask: bool = True,
) -> ShadowMask:
    """Classify grid cells against the centroid and assemble the shadow mask.

    The mask is returned at the resolution of `img`, with shadow pixels at
    255. One refinement pass runs at grid level, followed by a single median
    smoothing pass at image resolution.
    """
    if centroid is None:
        raise RuntimeError("shadow detection requires a trained centroid")
    img = validate_gray(img)
    grid = partition(img, grid_n)
    features = grid.feature_matrix(feature)
    cells = classify_grid(features, centroid, threshold, shots=shots, seed=seed)
    if refine_mask:
        cells = refine(cells)

    h, w = img.shape
    row_idx = np.repeat(np.arange(grid_n), np.diff(grid_edges(h, grid_n)))
    col_idx = np.repeat(np.arange(grid_n), np.diff(grid_edges(w, grid_n)))
    full = np.where(cells[np.ix_(row_idx, col_idx)], 255, 0).astype(np.uint8)
    full = median_filter(full, iterations=1)
    provenance = MaskProvenance(
        centroid_theta=centroid.theta,
        threshold=threshold,
        kind=kind,
        grid_n=grid_n,
        seed=seed,
        feature=feature,
    )
    return ShadowMask(mask=full, provenance=provenance)


def upscale_mask(mask: np.ndarray, factor: int, out_shape: tuple[int, int]) -> np.ndarray:
    """Expand a downsampled-resolution mask back to the original dimensions.

    Each mask pixel paints its factor x factor block; rows and columns lost
    to the floor division during downsampling repeat the last block."""
    mask = validate_mask(mask)
    big = np.repeat(np.repeat(mask, factor, axis=0), factor, axis=1)
    h, w = out_shape
    if big.shape[0] < h:
        big = np.vstack([big, np.repeat(big[-1:], h - big.shape[0], axis=0)])
    if big.shape[1] < w:
        big = np.hstack([big, np.repeat(big[:, -1:], w - big.shape[1], axis=1)])
    return big[:h, :w]


def replace_shadow(
    img: np.ndarray,
    mask: np.ndarray,
    roi_polygon: list[tuple[float, float]],
) -> tuple[np.ndarray, bool]:
    """Paint shadow pixels inside the polygon with the median of the
    non-shadow pixels there.

    Returns (image, degenerate) where degenerate is True when the polygon
    holds no non-shadow pixel and the image is returned unchanged."""
    img = validate_gray(img)
    mask = validate_mask(mask)
    if mask.shape != img.shape:
        raise ValueError(f"mask shape {mask.shape} != image shape {img.shape}")
    inside = polygon_mask(img.shape, roi_polygon)
    shadow = (mask == 255) & inside
    source = inside & (mask == 0)
    if not source.any():
        return img.copy(), True
    fill = np.uint8(np.median(img[source]))
    out = img.copy()
    out[shadow] = fill
    return out, False
