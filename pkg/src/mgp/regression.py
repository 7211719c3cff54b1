"""Two mathematically equivalent GP regression paths.

The weight-space path ("method D") works with D x D matrices: it factors
the posterior weight precision ``(1/sigma^2) Phi Phi.T + (1/sigma_p^2) I``
and predicts in O(D) per point.  The function-space path ("method N")
factors the N x N covariance ``K + sigma^2 I`` and predicts in O(N D) per
point.  Both expose the log-marginal likelihood; a determinant identity
(Sylvester) lets the weight-space path evaluate it without ever forming the
N x N covariance:

    sigma^(-2N) * |Sigma| / |Sigma_p| = 1 / |K + sigma^2 I|

so  log|K + sigma^2 I| = 2 N log sigma + log|Sigma^-1| + 2 D log sigma_p.

The weight-space LML is therefore

    -(1/(2 sigma^2)) (y - Phi.T w)^T y - sum_j log L_jj
      - D log sigma_p - (N/2) log(2 pi sigma^2)

with L the factor of the precision.  Note the D (not N) factor on the
log sigma_p term; it is forced by the identity above and reduces to the
single-scale textbook form when D = N or sigma_p = 1.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .clustering import ScaleConfig
from .dataset import Dataset, NormalizationStats
from .kernel import (BasisSet, design_matrix, feature_vector, gram,
                     kernel_matrix, kself, kstar)

LOG_2PI = math.log(2.0 * math.pi)

# O(N^3) guard for the function-space path; override with allow_large.
MAX_FUNCTION_SPACE_N = 20000


@dataclass(frozen=True)
class Hyperparameters:
    """Noise std, prior weight std, and the clustering scale ladder."""

    sigma: float
    sigma_p: float
    scale_cfg: ScaleConfig

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.sigma_p <= 0:
            raise ValueError("sigma_p must be > 0")

    def replace(self, **kwargs) -> "Hyperparameters":
        scale_fields = {"h1", "beta", "n_scales", "gamma"}
        cfg_kwargs = {k: v for k, v in kwargs.items() if k in scale_fields}
        own_kwargs = {k: v for k, v in kwargs.items() if k not in scale_fields}
        cfg = self.scale_cfg
        if cfg_kwargs:
            cfg = ScaleConfig(
                h1=cfg_kwargs.get("h1", cfg.h1),
                beta=cfg_kwargs.get("beta", cfg.beta),
                n_scales=cfg_kwargs.get("n_scales", cfg.n_scales),
                gamma=cfg_kwargs.get("gamma", cfg.gamma),
            )
        return Hyperparameters(
            sigma=own_kwargs.get("sigma", self.sigma),
            sigma_p=own_kwargs.get("sigma_p", self.sigma_p),
            scale_cfg=cfg,
        )


@dataclass(frozen=True)
class Prediction:
    """Predictive mean and variance at one test point."""

    mean: float
    variance: float


@dataclass(frozen=True)
class MethodDModel:
    """Weight-space model: factored precision and posterior weight mean."""

    basis: BasisSet
    chol_precision: linalg.CholeskyFactor
    weights: np.ndarray
    hyper: Hyperparameters
    lml: float
    n_train: int
    norm: NormalizationStats | None = None

    @property
    def method(self) -> str:
        return "D"


@dataclass(frozen=True)
class MethodNModel:
    """Function-space model: factored covariance and dual weights."""

    basis: BasisSet
    chol_cov: linalg.CholeskyFactor
    alpha: np.ndarray
    training_inputs: np.ndarray
    hyper: Hyperparameters
    lml: float
    norm: NormalizationStats | None = None

    @property
    def method(self) -> str:
        return "N"

    @property
    def n_train(self) -> int:
        return self.training_inputs.shape[0]


def lml_d(chol_precision: linalg.CholeskyFactor, weights: np.ndarray,
          phi: np.ndarray, y: np.ndarray, sigma: float, sigma_p: float) -> float:
    """Weight-space log-marginal likelihood in O(N D + D)."""
    n = y.shape[0]
    d = weights.shape[0]
    resid_quad = float(np.dot(y - phi.T @ weights, y))
    log_l_diag = float(np.sum(np.log(np.diag(chol_precision.lower))))
    return (-0.5 * resid_quad / sigma**2
            - log_l_diag
            - d * math.log(sigma_p)
            - 0.5 * n * (LOG_2PI + 2.0 * math.log(sigma)))


def lml_n(chol_cov: linalg.CholeskyFactor, alpha: np.ndarray,
          y: np.ndarray) -> float:
    """Function-space log-marginal likelihood from the covariance factor."""
    n = y.shape[0]
    log_l_diag = float(np.sum(np.log(np.diag(chol_cov.lower))))
    return -0.5 * float(np.dot(y, alpha)) - log_l_diag - 0.5 * n * LOG_2PI


def train_d(data: Dataset, basis: BasisSet, hyper: Hyperparameters,
            norm: NormalizationStats | None = None,
            jitter_policy: linalg.JitterPolicy | None = linalg.DEFAULT_JITTER
            ) -> MethodDModel:
    """Train the weight-space path: O(N D^2) assembly, O(D^3) factorization."""
    sigma, sigma_p = hyper.sigma, hyper.sigma_p
    phi = design_matrix(data, basis)
    precision = gram(phi) / sigma**2
    precision[np.diag_indices_from(precision)] += 1.0 / sigma_p**2
    factor = linalg.cholesky(precision, jitter_policy)
    weights = linalg.solve_spd(factor, phi @ data.targets) / sigma**2
    lml = lml_d(factor, weights, phi, data.targets, sigma, sigma_p)
    return MethodDModel(basis=basis, chol_precision=factor, weights=weights,
                        hyper=hyper, lml=lml, n_train=data.count, norm=norm)


def predict_d(model: MethodDModel, q_test) -> Prediction:
    """O(D) mean, O(D^2) variance via one triangular solve."""
    phi_star = feature_vector(model.basis, q_test)
    mean = float(np.dot(phi_star, model.weights))
    half = linalg.solve_lower(model.chol_precision, phi_star)
    variance = float(np.dot(half, half)) + model.hyper.sigma**2
    return Prediction(mean, variance)


def predict_mean_d(model: MethodDModel, q_test) -> float:
    """Mean-only weight-space prediction: one length-D dot product."""
    return float(np.dot(feature_vector(model.basis, q_test), model.weights))


def predict_mean_n(model: "MethodNModel", q_test) -> float:
    """Mean-only function-space prediction: O(N D) to build k*."""
    ks = kstar(q_test, model.training_inputs, model.basis, model.hyper.sigma_p)
    return float(np.dot(ks, model.alpha))


def train_n(data: Dataset, basis: BasisSet, hyper: Hyperparameters,
            norm: NormalizationStats | None = None,
            jitter_policy: linalg.JitterPolicy | None = linalg.DEFAULT_JITTER,
            allow_large: bool = False) -> MethodNModel:
    """Train the function-space path: O(N^2 D) assembly, O(N^3) factorization."""
    if data.count > MAX_FUNCTION_SPACE_N and not allow_large:
        raise ValueError(
            f"N={data.count} exceeds the function-space guard "
            f"({MAX_FUNCTION_SPACE_N}); pass allow_large=True to override"
        )
    sigma = hyper.sigma
    cov = kernel_matrix(data, basis, hyper.sigma_p)
    cov[np.diag_indices_from(cov)] += sigma**2
    factor = linalg.cholesky(cov, jitter_policy)
    alpha = linalg.solve_spd(factor, data.targets)
    lml = lml_n(factor, alpha, data.targets)
    return MethodNModel(basis=basis, chol_cov=factor, alpha=alpha,
                        training_inputs=data.inputs, hyper=hyper, lml=lml,
                        norm=norm)


def predict_n(model: MethodNModel, q_test) -> Prediction:
    """O(N D) mean (dominated by k*), O(N^2) variance."""
    ks = kstar(q_test, model.training_inputs, model.basis, model.hyper.sigma_p)
    mean = float(np.dot(ks, model.alpha))
    half = linalg.solve_lower(model.chol_cov, ks)
    variance = (kself(q_test, model.basis, model.hyper.sigma_p)
                - float(np.dot(half, half)) + model.hyper.sigma**2)
    return Prediction(mean, variance)


def lemma1_residual(data: Dataset, basis: BasisSet,
                    hyper: Hyperparameters) -> float:
    """Log-space residual of the determinant identity linking the paths.

    Computes |log(sigma^(-2N) |Sigma| / |Sigma_p|) - log(1/|K + sigma^2 I|)|
    with both determinants taken from Cholesky factors.  Exact up to
    round-off for any hyperparameters.
    """
    if data.count > 512:
        raise ValueError("dense determinant cross-check guarded to N <= 512")
    sigma, sigma_p = hyper.sigma, hyper.sigma_p
    phi = design_matrix(data, basis)
    precision = gram(phi) / sigma**2
    precision[np.diag_indices_from(precision)] += 1.0 / sigma_p**2
    lhs = (-2.0 * data.count * math.log(sigma)
           - linalg.logdet(linalg.cholesky(precision))
           - 2.0 * basis.size * math.log(sigma_p))
    cov = kernel_matrix(data, basis, sigma_p)
    cov[np.diag_indices_from(cov)] += sigma**2
    rhs = -linalg.logdet(linalg.cholesky(cov))
    return abs(lhs - rhs)


# --- plain Gaussian-kernel GP -------------------------------------------
#
# Direct RBF-kernel comparator: k(q, q') = sigma_p^2 exp(-||q-q'||^2 /
# (2 l^2)).  This is the infinite-basis limit of the weight-space model
# (basis width h maps to kernel lengthscale l = h / sqrt(2), i.e. the
# kernel Gaussians are sqrt(2) wider than the basis bumps).  Used by the
# benchmark harness as the classical reference fit.


@dataclass(frozen=True)
class RbfGPModel:
    """Classical Gaussian-kernel GP (lengthscale parametrization)."""

    lengthscale: float
    sigma: float
    sigma_p: float
    chol_cov: linalg.CholeskyFactor
    alpha: np.ndarray
    training_inputs: np.ndarray
    lml: float
    norm: NormalizationStats | None = None

    @property
    def n_train(self) -> int:
        return self.training_inputs.shape[0]


def rbf_kernel_matrix(a: np.ndarray, b: np.ndarray, lengthscale: float,
                      sigma_p: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    diff = a[:, None, :] - b[None, :, :]
    d2 = np.einsum("mni,mni->mn", diff, diff)
    return sigma_p**2 * np.exp(-d2 / (2.0 * lengthscale**2))


def train_rbf(data: Dataset, sigma: float, lengthscale: float,
              sigma_p: float = 1.0, norm: NormalizationStats | None = None,
              jitter_policy: linalg.JitterPolicy | None = linalg.DEFAULT_JITTER
              ) -> RbfGPModel:
    if sigma <= 0 or lengthscale <= 0 or sigma_p <= 0:
        raise ValueError("sigma, lengthscale and sigma_p must be > 0")
    cov = rbf_kernel_matrix(data.inputs, data.inputs, lengthscale, sigma_p)
    cov = np.triu(cov) + np.triu(cov, 1).T
    cov[np.diag_indices_from(cov)] += sigma**2
    factor = linalg.cholesky(cov, jitter_policy)
    alpha = linalg.solve_spd(factor, data.targets)
    lml = lml_n(factor, alpha, data.targets)
    return RbfGPModel(lengthscale=lengthscale, sigma=sigma, sigma_p=sigma_p,
                      chol_cov=factor, alpha=alpha,
                      training_inputs=data.inputs, lml=lml, norm=norm)


def predict_rbf(model: RbfGPModel, q_test) -> Prediction:
    q = np.asarray(q_test, dtype=float).reshape(1, -1)
    ks = rbf_kernel_matrix(model.training_inputs, q, model.lengthscale,
                           model.sigma_p)[:, 0]
    mean = float(np.dot(ks, model.alpha))
    half = linalg.solve_lower(model.chol_cov, ks)
    variance = model.sigma_p**2 - float(np.dot(half, half)) + model.sigma**2
    return Prediction(mean, variance)
