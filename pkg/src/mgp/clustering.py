"""Greedy covering cluster-center selection, single- and multi-scale.

The single-scale pass repeatedly picks a random remaining point as a center
and absorbs every remaining point within the cluster radius, so centers end
up pairwise separated by more than the radius while every absorbed point
lies within it.  The multiscale pass runs that loop over a geometric ladder
of scales ``h_s = h1 * beta**(s-1)`` with radius ``gamma * h_s``, removing
only the chosen centers between scales; non-center points stay candidates
for the finer scales.  Cost of one pass is O(N * k) with a brute-force
neighbor scan per center.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScaleConfig:
    """Geometric scale ladder and cluster-radius factor.

    Scale ``s`` (1-based) has width ``h1 * beta**(s-1)`` and cluster radius
    ``gamma`` times that width.
    """

    h1: float
    beta: float = 0.5
    n_scales: int = 1
    gamma: float = 0.3

    def __post_init__(self):
        if self.h1 <= 0:
            raise ValueError("h1 must be > 0")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.n_scales < 1:
            raise ValueError("n_scales must be >= 1")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")

    def scale(self, s: int) -> float:
        """Width of scale ``s`` (1-based)."""
        return self.h1 * self.beta ** (s - 1)

    def scales(self) -> np.ndarray:
        return np.array([self.scale(s) for s in range(1, self.n_scales + 1)])

    def radius(self, s: int) -> float:
        return self.gamma * self.scale(s)


@dataclass(frozen=True)
class ClusterResult:
    """Centers selected over all scales.

    ``centers`` holds exact copies of training rows, ``scale_indices`` the
    1-based scale each center belongs to, and ``source_rows`` the row index
    of each center in the original point set.  ``scale_assignments`` keeps,
    per scale, the rows clustered at that scale and the ordinal (within the
    scale) of the center each was absorbed by; it backs coverage audits.
    """

    centers: np.ndarray
    scale_indices: np.ndarray
    source_rows: np.ndarray
    per_scale_counts: np.ndarray
    scale_assignments: tuple

    @property
    def total(self) -> int:
        return self.centers.shape[0]

    def scales_for_centers(self, cfg: ScaleConfig) -> np.ndarray:
        """Per-center width ``h1 * beta**(s-1)`` from each center's scale."""
        return cfg.h1 * cfg.beta ** (self.scale_indices - 1)


@dataclass(frozen=True)
class ScaleCoverage:
    """Coverage and separation audit for one scale."""

    scale_index: int
    radius: float
    n_centers: int
    n_points: int
    max_point_distance: float
    min_center_separation: float


def cluster_single_scale(points: np.ndarray, radius: float, rng):
    """Greedy random covering of ``points`` with balls of ``radius``.

    Picks a random remaining point as the next center, absorbs all remaining
    points within ``radius`` (boundary inclusive), and repeats until no
    points remain.

    Returns ``(center_indices, assignment)`` where ``center_indices`` are
    indices into ``points`` in selection order and ``assignment[i]`` is the
    cluster ordinal of point ``i``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    n = points.shape[0]
    if n == 0:
        raise ValueError("point set is empty")
    if radius <= 0:
        raise ValueError("radius must be > 0")

    remaining = np.arange(n)
    assignment = np.empty(n, dtype=np.intp)
    centers = []
    r2 = radius * radius
    while remaining.size:
        pick = int(rng.integers(remaining.size))
        center_row = remaining[pick]
        diff = points[remaining] - points[center_row]
        absorbed = np.einsum("ij,ij->i", diff, diff) <= r2
        assignment[remaining[absorbed]] = len(centers)
        centers.append(center_row)
        remaining = remaining[~absorbed]
    return np.asarray(centers, dtype=np.intp), assignment


def cluster_multiscale(points: np.ndarray, cfg: ScaleConfig, rng) -> ClusterResult:
    """Run the covering pass over the scale ladder, coarse to fine.

    After each scale only the selected centers leave the candidate set, so a
    point absorbed (but not chosen) at a coarse scale can still become a
    center at a finer one.  Points never chosen by scale ``n_scales`` are
    discarded.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] == 0:
        raise ValueError("point set is empty")

    remaining = np.arange(points.shape[0])
    source_rows = []
    scale_indices = []
    counts = np.zeros(cfg.n_scales, dtype=np.intp)
    assignments = []
    for s in range(1, cfg.n_scales + 1):
        if remaining.size == 0:
            assignments.append((np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)))
            continue
        local_centers, local_assign = cluster_single_scale(
            points[remaining], cfg.radius(s), rng
        )
        chosen = remaining[local_centers]
        source_rows.extend(chosen.tolist())
        scale_indices.extend([s] * chosen.size)
        counts[s - 1] = chosen.size
        assignments.append((remaining.copy(), local_assign))
        keep = np.ones(remaining.size, dtype=bool)
        keep[local_centers] = False
        remaining = remaining[keep]

    source_rows = np.asarray(source_rows, dtype=np.intp)
    return ClusterResult(
        centers=points[source_rows].copy(),
        scale_indices=np.asarray(scale_indices, dtype=np.intp),
        source_rows=source_rows,
        per_scale_counts=counts,
        scale_assignments=tuple(assignments),
    )


def coverage_report(points: np.ndarray, result: ClusterResult,
                    cfg: ScaleConfig) -> list[ScaleCoverage]:
    """Audit coverage and center separation of a clustering, per scale.

    For every scale: the max distance from a point clustered there to its
    center (bounded by the scale radius) and the min pairwise distance among
    that scale's centers (greater than the radius; inf with < 2 centers).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    report = []
    for s in range(1, cfg.n_scales + 1):
        rows, ordinals = result.scale_assignments[s - 1]
        center_rows = result.source_rows[result.scale_indices == s]
        if rows.size:
            centers = points[center_rows]
            diff = points[rows] - centers[ordinals]
            max_dist = float(np.sqrt(np.einsum("ij,ij->i", diff, diff).max()))
        else:
            max_dist = 0.0
        if center_rows.size >= 2:
            c = points[center_rows]
            d2 = np.sum((c[:, None, :] - c[None, :, :]) ** 2, axis=-1)
            np.fill_diagonal(d2, np.inf)
            min_sep = float(np.sqrt(d2.min()))
        else:
            min_sep = np.inf
        report.append(ScaleCoverage(
            scale_index=s,
            radius=cfg.radius(s),
            n_centers=int(center_rows.size),
            n_points=int(rows.size),
            max_point_distance=max_dist,
            min_center_separation=min_sep,
        ))
    return report


def min_pairwise_distance(points: np.ndarray) -> float:
    """Smallest Euclidean distance between distinct points (brute force)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] < 2:
        return np.inf
    d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))
