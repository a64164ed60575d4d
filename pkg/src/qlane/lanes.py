"""Consolidate detected line segments into two representative slopes.

Three strategies: splitting the image into halves, 1-d k-means on slopes,
and spectral clustering on a slope-affinity matrix. Cluster pairs are
ordered by ascending slope so downstream decision heads see a canonical
layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .imaging import LineSegment


class VerticalLineError(ValueError):
    """All points share one x coordinate; no finite-slope fit exists."""


@dataclass(frozen=True)
class SlopePair:
    """The 2x1 slope feature vector fed to the decision heads."""

    s_left: float
    s_right: float

    def __iter__(self):
        yield self.s_left
        yield self.s_right

    def ascending(self) -> "SlopePair":
        lo, hi = sorted((self.s_left, self.s_right))
        return SlopePair(lo, hi)


@dataclass(frozen=True)
class FittedLine:
    slope: float
    intercept: float
    support: int


@dataclass(frozen=True)
class ClusterAssignment:
    labels: tuple
    method: str
    degenerate: bool = False


def fit_line(points: list[tuple[float, float]]) -> FittedLine:
    """Ordinary least-squares line y = slope * x + intercept."""
    if len(points) < 2:
        raise InsufficientDataError(f"need >= 2 points to fit a line, got {len(points)}")
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    xbar = xs.mean()
    sxx = np.sum((xs - xbar) ** 2)
    if sxx == 0:
        raise VerticalLineError("all points share one x coordinate")
    slope = float(np.sum((xs - xbar) * (ys - ys.mean())) / sxx)
    intercept = float(ys.mean() - slope * xbar)
    return FittedLine(slope=slope, intercept=intercept, support=len(points))


def _finite_slopes(segments: list[LineSegment]) -> np.ndarray:
    slopes = np.array([s.slope for s in segments], dtype=np.float64)
    if not np.isfinite(slopes).all():
        raise VerticalLineError("vertical segment has no finite slope")
    return slopes


def image_split(segments: list[LineSegment], image_width: int) -> SlopePair:
    """Fit one line per image half; segments are assigned by midpoint x."""
    mid = image_width / 2.0
    halves: dict[str, list[tuple[float, float]]] = {"left": [], "right": []}
    for seg in segments:
        side = "left" if seg.midpoint[0] < mid else "right"
        halves[side].extend([(seg.x1, seg.y1), (seg.x2, seg.y2)])
    for side in ("left", "right"):
        if not halves[side]:
            raise InsufficientDataError(f"no segments in the {side} image half")
    left = fit_line(halves["left"])
    right = fit_line(halves["right"])
    return SlopePair(s_left=left.slope, s_right=right.slope)


def middle_line(segments: list[LineSegment], image_width: int) -> FittedLine:
    """Mean of the two half fits, for visualization only."""
    mid = image_width / 2.0
    halves: dict[str, list[tuple[float, float]]] = {"left": [], "right": []}
    for seg in segments:
        side = "left" if seg.midpoint[0] < mid else "right"
        halves[side].extend([(seg.x1, seg.y1), (seg.x2, seg.y2)])
    fits = [fit_line(pts) for pts in halves.values() if pts]
    if not fits:
        raise InsufficientDataError("no segments to build a middle line")
    return FittedLine(
        slope=float(np.mean([f.slope for f in fits])),
        intercept=float(np.mean([f.intercept for f in fits])),
        support=sum(f.support for f in fits),
    )


def _lloyd_1d(values: np.ndarray, max_iters: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Two-means on scalars, deterministically seeded at (min, max)."""
    centers = np.array([values.min(), values.max()], dtype=np.float64)
    labels = np.zeros(len(values), dtype=np.int64)
    for _ in range(max_iters):
        dist = np.abs(values[:, None] - centers[None, :])
        new_labels = np.argmin(dist, axis=1)  # ties go to the lower center
        for k in range(2):
            sel = new_labels == k
            if sel.any():
                centers[k] = values[sel].mean()
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centers


def kmeans_slopes(
    segments: list[LineSegment],
    k: int = 2,
    seed: int | None = None,
) -> tuple[ClusterAssignment, SlopePair]:
    """1-d k-means over segment slopes (deterministic min/max init; the seed
    argument is accepted for interface stability but unused)."""
    del seed
    if k != 2:
        raise ValueError("only k = 2 is supported")
    if len(segments) < 2:
        raise InsufficientDataError(f"need >= 2 segments, got {len(segments)}")
    slopes = _finite_slopes(segments)
    if np.ptp(slopes) == 0:
        s = float(slopes[0])
        return (
            ClusterAssignment(labels=tuple([0] * len(segments)), method="k-means", degenerate=True),
            SlopePair(s, s),
        )
    labels, centers = _lloyd_1d(slopes)
    order = np.argsort(centers)
    remap = {int(order[0]): 0, int(order[1]): 1}
    labels = tuple(remap[int(l)] for l in labels)
    label_arr = np.array(labels)
    means = [
        float(slopes[label_arr == j].mean()) if (label_arr == j).any() else float(centers[order[j]])
        for j in (0, 1)
    ]
    return (
        ClusterAssignment(labels=labels, method="k-means"),
        SlopePair(means[0], means[1]),
    )


def spectral_slopes(
    segments: list[LineSegment],
    k: int = 2,
    sigma_rbf: float | None = None,
) -> tuple[ClusterAssignment, SlopePair]:
    """Spectral clustering on the slope affinity exp(-(si-sj)^2 / 2 sigma^2).

    sigma defaults to the median absolute pairwise slope gap (1.0 when all
    gaps vanish). The normalized-Laplacian embedding is clustered by 1-d
    two-means on its second eigenvector.
    """
    if k != 2:
        raise ValueError("only k = 2 is supported")
    if len(segments) < 2:
        raise InsufficientDataError(f"need >= 2 segments, got {len(segments)}")
    slopes = _finite_slopes(segments)
    if np.ptp(slopes) == 0:
        s = float(slopes[0])
        return (
            ClusterAssignment(labels=tuple([0] * len(segments)), method="spectral", degenerate=True),
            SlopePair(s, s),
        )
    gaps = np.abs(slopes[:, None] - slopes[None, :])
    if sigma_rbf is None:
        upper = gaps[np.triu_indices(len(slopes), 1)]
        sigma_rbf = float(np.median(upper))
        if sigma_rbf == 0:
            sigma_rbf = 1.0
    w = np.exp(-(gaps**2) / (2.0 * sigma_rbf**2))
    d_inv_sqrt = 1.0 / np.sqrt(w.sum(axis=1))
    lap = np.eye(len(slopes)) - d_inv_sqrt[:, None] * w * d_inv_sqrt[None, :]
    _, vecs = np.linalg.eigh(lap)
    embedding = vecs[:, :2]
    norms = np.linalg.norm(embedding, axis=1)
    norms[norms == 0] = 1.0
    embedding = embedding / norms[:, None]
    labels, _ = _lloyd_1d(embedding[:, 1])
    mean0 = slopes[labels == 0].mean()
    mean1 = slopes[labels == 1].mean()
    if mean0 > mean1:
        labels = 1 - labels
        mean0, mean1 = mean1, mean0
    return (
        ClusterAssignment(labels=tuple(int(l) for l in labels), method="spectral"),
        SlopePair(float(mean0), float(mean1)),
    )


def consolidate(
    segments: list[LineSegment],
    method: str,
    image_width: int,
) -> tuple[SlopePair, tuple]:
    """Run one clustering strategy; returns the pair and per-segment labels."""
    if method == "image_split":
        pair = image_split(segments, image_width)
        mid = image_width / 2.0
        labels = tuple(0 if seg.midpoint[0] < mid else 1 for seg in segments)
        return pair, labels
    if method == "kmeans":
        assignment, pair = kmeans_slopes(segments)
        return pair, assignment.labels
    if method == "spectral":
        assignment, pair = spectral_slopes(segments)
        return pair, assignment.labels
    raise ValueError(f"unknown clustering method {method!r}")


def assignments_csv(segments: list[LineSegment], labels: tuple, method: str) -> str:
    """CSV dump of segments and cluster labels."""
    lines = ["x1,y1,x2,y2,slope,label,method"]
    for seg, label in zip(segments, labels):
        slope = "inf" if seg.vertical else f"{seg.slope:.6f}"
        lines.append(f"{seg.x1},{seg.y1},{seg.x2},{seg.y2},{slope},{label},{method}")
    return "\n".join(lines) + "\n"
