"""Gaussian basis evaluation and assembly of the regression matrices.

A basis is a set of D Gaussian bumps, each with its own center and width:
``phi_j(q) = exp(-||q - c_j||^2 / h_j^2)``.  From it we assemble the D x N
design matrix Phi (one basis per row, one sample per column), the D x D
Gram matrix ``Phi @ Phi.T``, and the N x N covariance ``K = sigma_p^2 *
Phi.T @ Phi`` implied by an isotropic Gaussian prior on the weights.

Squared distances are accumulated as sums of squared coordinate
differences; the expanded ||a||^2 + ||b||^2 - 2ab form cancels
catastrophically near zero distance.
"""

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterResult, ScaleConfig
from .dataset import Dataset


@dataclass(frozen=True)
class BasisSet:
    """D Gaussian basis functions: centers ``(D, d)`` and widths ``(D,)``."""

    centers: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        if centers.ndim == 1:
            centers = centers.reshape(-1, 1)
        scales = np.asarray(self.scales, dtype=float).ravel()
        if centers.shape[0] != scales.shape[0]:
            raise ValueError("centers and scales must have equal length")
        if centers.shape[0] < 1:
            raise ValueError("basis needs at least one center")
        if (scales <= 0).any():
            raise ValueError("all scales must be > 0")
        centers.setflags(write=False)
        scales.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "scales", scales)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def basis_from_clusters(result: ClusterResult, cfg: ScaleConfig) -> BasisSet:
    """Basis with one Gaussian per cluster center, width from its scale."""
    return BasisSet(result.centers, result.scales_for_centers(cfg))


def full_basis(data: Dataset, h: float) -> BasisSet:
    """Degenerate D = N basis: every training input a center, one width."""
    return BasisSet(data.inputs, np.full(data.count, float(h)))


def basis_eval(q, center, h: float) -> float:
    """Single Gaussian bump value exp(-||q - center||^2 / h^2)."""
    if h <= 0:
        raise ValueError("h must be > 0")
    q = np.asarray(q, dtype=float).ravel()
    center = np.asarray(center, dtype=float).ravel()
    if q.shape != center.shape:
        raise ValueError("point and center dimensions differ")
    d2 = float(np.sum((q - center) ** 2))
    return float(np.exp(-d2 / (h * h)))


def basis_values(basis: BasisSet, points: np.ndarray) -> np.ndarray:
    """Evaluate all basis functions at all points: shape (D, M)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    diff = basis.centers[:, None, :] - points[None, :, :]
    d2 = np.einsum("jmi,jmi->jm", diff, diff)
    return np.exp(-d2 / basis.scales[:, None] ** 2)


def feature_vector(basis: BasisSet, q) -> np.ndarray:
    """Basis activations phi(q), shape (D,)."""
    q = np.asarray(q, dtype=float).ravel()
    return basis_values(basis, q.reshape(1, -1))[:, 0]


def design_matrix(data: Dataset, basis: BasisSet) -> np.ndarray:
    """D x N matrix with entry (j, n) = phi_j(q_n); entries in (0, 1]."""
    if data.dim_in != basis.dim:
        raise ValueError("data and basis dimensions differ")
    return basis_values(basis, data.inputs)


def gram(phi: np.ndarray) -> np.ndarray:
    """Phi @ Phi.T with the upper triangle mirrored for exact symmetry."""
    g = phi @ phi.T
    return np.triu(g) + np.triu(g, 1).T


def kernel_matrix(data: Dataset, basis: BasisSet, sigma_p: float) -> np.ndarray:
    """N x N covariance sigma_p^2 * Phi.T @ Phi; symmetric PSD."""
    if sigma_p <= 0:
        raise ValueError("sigma_p must be > 0")
    phi = design_matrix(data, basis)
    k = sigma_p**2 * (phi.T @ phi)
    return np.triu(k) + np.triu(k, 1).T


def kstar(q_test, data, basis: BasisSet, sigma_p: float) -> np.ndarray:
    """Covariance between a test point and the N training points.

    Entry n is ``sigma_p^2 * sum_j phi_j(q_n) * phi_j(q_test)``.  ``data``
    may be a :class:`Dataset` or a bare ``(N, d)`` input matrix.
    """
    if sigma_p <= 0:
        raise ValueError("sigma_p must be > 0")
    inputs = data.inputs if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    phi = basis_values(basis, inputs)
    return sigma_p**2 * (phi.T @ feature_vector(basis, q_test))


def kself(q_test, basis: BasisSet, sigma_p: float) -> float:
    """Prior variance at a point: sigma_p^2 * sum_j phi_j(q)^2."""
    v = feature_vector(basis, q_test)
    return float(sigma_p**2 * np.dot(v, v))
