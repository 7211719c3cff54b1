"""Dense SPD linear algebra: Cholesky factors, triangular solves, logdet.

Factorization is delegated to LAPACK (via numpy) behind a thin wrapper that
adds a relative jitter-retry policy for matrices driven near singularity by
hyperparameter excursions, and records any jitter actually applied.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


class AsymmetricInputError(ValueError):
    """Input matrix is not symmetric within tolerance."""


class NotPositiveDefiniteError(ValueError):
    """Cholesky failed even after exhausting jitter retries."""


@dataclass(frozen=True)
class JitterPolicy:
    """Relative diagonal jitter: start at ``rel_eps * mean(diag)``, double
    each retry, give up after ``max_retries``."""

    rel_eps: float = 1e-10
    max_retries: int = 5


DEFAULT_JITTER = JitterPolicy()


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular L with L @ L.T equal to the factored matrix.

    ``jitter`` is the diagonal shift that was added before factorization
    succeeded (0.0 if none was needed).
    """

    lower: np.ndarray
    jitter: float = 0.0

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        if lower.ndim != 2 or lower.shape[0] != lower.shape[1]:
            raise ValueError("factor must be square")
        if (np.diag(lower) <= 0).any():
            raise ValueError("factor diagonal must be strictly positive")
        if np.triu(lower, 1).any():
            raise ValueError("factor must be lower-triangular")
        lower.setflags(write=False)
        object.__setattr__(self, "lower", lower)

    @property
    def order(self) -> int:
        return self.lower.shape[0]


def cholesky(m: np.ndarray, jitter_policy: JitterPolicy | None = DEFAULT_JITTER
             ) -> CholeskyFactor:
    """Factor a symmetric positive-definite matrix as L @ L.T.

    Raises :class:`AsymmetricInputError` when the asymmetry exceeds
    ``1e-10 * ||m||`` and :class:`NotPositiveDefiniteError` when the matrix
    stays non-PD after the policy's retries.  ``jitter_policy=None`` allows
    no retries at all.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.abs(m).max()
    if np.abs(m - m.T).max() > 1e-10 * max(scale, 1e-300):
        raise AsymmetricInputError("matrix is not symmetric")

    retries = 0 if jitter_policy is None else jitter_policy.max_retries
    mean_diag = float(np.abs(np.diag(m)).mean())
    delta = 0.0
    for attempt in range(retries + 1):
        try:
            lower = np.linalg.cholesky(m if delta == 0.0 else m + delta * np.eye(m.shape[0]))
            return CholeskyFactor(lower, jitter=delta)
        except np.linalg.LinAlgError:
            if attempt == retries:
                break
            if delta == 0.0:
                delta = jitter_policy.rel_eps * max(mean_diag, 1e-300)
            else:
                delta *= 2.0
    raise NotPositiveDefiniteError(
        f"matrix not positive definite (last jitter {delta:g})"
    )


def solve_lower(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Forward substitution L x = b."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.order:
        raise ValueError("dimension mismatch")
    return solve_triangular(factor.lower, b, lower=True)


def solve_upper(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Back substitution L.T x = b."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.order:
        raise ValueError("dimension mismatch")
    return solve_triangular(factor.lower, b, lower=True, trans="T")


def solve_spd(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve (L @ L.T) x = b via the two triangular sweeps."""
    return solve_upper(factor, solve_lower(factor, b))


def logdet(factor: CholeskyFactor) -> float:
    """Log-determinant of the factored matrix: 2 * sum(log diag(L))."""
    return float(2.0 * np.sum(np.log(np.diag(factor.lower))))
