"""Derivative-free maximization of the log-marginal likelihood.

The objective re-runs center clustering on every evaluation (centers depend
on the scale ladder and gamma) with a frozen clustering seed, so it is a
deterministic function of the hyperparameters.  Positivity and (0, 1)
bounds are enforced by optimizing log(sigma), log(sigma_p), log(h1),
logit(beta), logit(gamma).  Evaluations that fail to factor map to +inf and
behave as the worst simplex point.  Multiple simplex starts guard against
the local minima this objective is prone to.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .clustering import cluster_multiscale
from .dataset import Dataset
from .kernel import basis_from_clusters
from .regression import Hyperparameters, train_d, train_n, train_rbf

PARAM_ORDER = ("sigma", "sigma_p", "h1", "beta", "gamma")
_LOG_PARAMS = {"sigma", "sigma_p", "h1"}
_LOGIT_PARAMS = {"beta", "gamma"}


@dataclass(frozen=True)
class OptimizerConfig:
    """Simplex settings, termination tolerances, and the free-parameter set.

    Each simplex start after the first begins from the best points of a
    coarse random probe of the transformed space (``n_probes`` draws within
    ``probe_spread`` of the initial guess); the objective has local optima
    and a bare simplex descent from one guess is unreliable.
    """

    free_params: tuple = ("sigma", "h1", "gamma")
    max_iters: int = 500
    f_tol: float = 1e-6
    x_tol: float = 1e-6
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    seed: int = 0
    n_starts: int = 3
    start_spread: float = 0.8
    n_probes: int = 30
    probe_spread: float = 2.5
    n_restarts: int = 2

    def __post_init__(self):
        if not self.free_params:
            raise ValueError("free_params must be nonempty")
        unknown = set(self.free_params) - set(PARAM_ORDER)
        if unknown:
            raise ValueError(f"unknown free parameters: {sorted(unknown)}")
        if not (self.reflection > 0 and self.expansion > 1
                and 0 < self.contraction < 1 and 0 < self.shrink < 1):
            raise ValueError("simplex coefficients out of range")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class NelderMeadResult:
    """Outcome of one simplex run on a scalar function."""

    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    reason: str                      # "f_tol" | "x_tol" | "budget"
    best_history: list = field(default_factory=list)


@dataclass(frozen=True)
class OptimizationReport:
    """Best hyperparameters over all starts plus bookkeeping."""

    best_hyper: Hyperparameters
    best_lml: float
    iterations: int
    evaluations: int
    basis_size: int
    termination: str
    cluster_seed: int


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _expit(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _param_value(hyper: Hyperparameters, name: str) -> float:
    if name in ("sigma", "sigma_p"):
        return getattr(hyper, name)
    return getattr(hyper.scale_cfg, name)


def transform(hyper: Hyperparameters, free_params) -> np.ndarray:
    """Map the free parameters to an unconstrained vector.

    log for the positive parameters (sigma, sigma_p, h1), logit for the
    (0, 1) parameters (beta, gamma).
    """
    out = []
    for name in free_params:
        v = _param_value(hyper, name)
        if name in _LOG_PARAMS:
            if v <= 0:
                raise ValueError(f"{name} must be > 0")
            out.append(math.log(v))
        else:
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
            out.append(_logit(v))
    return np.asarray(out, dtype=float)


def untransform(vec: np.ndarray, base: Hyperparameters, free_params
                ) -> Hyperparameters:
    """Inverse of :func:`transform`, splicing values into ``base``."""
    updates = {}
    for name, x in zip(free_params, np.asarray(vec, dtype=float)):
        updates[name] = math.exp(x) if name in _LOG_PARAMS else _expit(x)
    return base.replace(**updates)


def build_model(data: Dataset, hyper: Hyperparameters, method: str,
                cluster_seed: int, **train_kwargs):
    """Cluster, build the basis, and train one model.

    Returns ``(model, cluster_result)``.  The clustering PRNG is seeded
    freshly from ``cluster_seed`` so identical hyperparameters always yield
    the identical model.
    """
    rng = np.random.default_rng(cluster_seed)
    result = cluster_multiscale(data.inputs, hyper.scale_cfg, rng)
    basis = basis_from_clusters(result, hyper.scale_cfg)
    if method == "D":
        model = train_d(data, basis, hyper, **train_kwargs)
    elif method == "N":
        model = train_n(data, basis, hyper, **train_kwargs)
    else:
        raise ValueError(f"unknown method {method!r}")
    return model, result


def objective(data: Dataset, hyper: Hyperparameters, method: str,
              cluster_seed: int) -> float:
    """Negative log-marginal likelihood; +inf on factorization failure."""
    try:
        model, _ = build_model(data, hyper, method, cluster_seed)
    except (linalg.NotPositiveDefiniteError, linalg.AsymmetricInputError):
        return math.inf
    if not math.isfinite(model.lml):
        return math.inf
    return -model.lml


def nelder_mead(f, x0: np.ndarray, cfg: OptimizerConfig) -> NelderMeadResult:
    """Simplex minimization with reflect/expand/contract/shrink steps.

    The initial simplex is ``x0`` plus per-coordinate steps of
    ``0.05 * (1 + |x0_i|)``.  Terminates when the simplex function-value
    spread drops below ``f_tol``, the simplex diameter below ``x_tol``, or
    the iteration budget runs out.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.isfinite(x0).all():
        raise ValueError("x0 must be finite")
    n = x0.size
    rho, chi, psi, sig = cfg.reflection, cfg.expansion, cfg.contraction, cfg.shrink

    simplex = [x0.copy()]
    for i in range(n):
        step = np.zeros(n)
        step[i] = 0.05 * (1.0 + abs(x0[i]))
        simplex.append(x0 + step)
    simplex = np.asarray(simplex)
    fvals = np.array([f(x) for x in simplex])
    evaluations = n + 1
    best_history = []

    reason = "budget"
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        best_history.append(fvals[0])

        spread = fvals[-1] - fvals[0]
        diameter = np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1))
        if not math.isfinite(spread):
            spread = math.inf
        if spread < cfg.f_tol:
            reason = "f_tol"
            break
        if diameter < cfg.x_tol:
            reason = "x_tol"
            break

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + rho * (centroid - worst)
        fr = f(xr)
        evaluations += 1

        if fr < fvals[0]:
            xe = centroid + chi * (xr - centroid)
            fe = f(xe)
            evaluations += 1
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                # outside contraction
                xc = centroid + psi * (xr - centroid)
                fc = f(xc)
                evaluations += 1
                if fc <= fr:
                    simplex[-1], fvals[-1] = xc, fc
                else:
                    simplex, fvals, evaluations = _shrink(
                        f, simplex, fvals, sig, evaluations)
            else:
                # inside contraction
                xc = centroid - psi * (centroid - worst)
                fc = f(xc)
                evaluations += 1
                if fc < fvals[-1]:
                    simplex[-1], fvals[-1] = xc, fc
                else:
                    simplex, fvals, evaluations = _shrink(
                        f, simplex, fvals, sig, evaluations)

    order = np.argsort(fvals, kind="stable")
    simplex, fvals = simplex[order], fvals[order]
    best_history.append(fvals[0])
    return NelderMeadResult(x=simplex[0], fun=float(fvals[0]),
                            iterations=iterations, evaluations=evaluations,
                            reason=reason, best_history=best_history)


def _shrink(f, simplex, fvals, sig, evaluations):
    for i in range(1, simplex.shape[0]):
        simplex[i] = simplex[0] + sig * (simplex[i] - simplex[0])
        fvals[i] = f(simplex[i])
        evaluations += 1
    return simplex, fvals, evaluations


def _polish(f, x0: np.ndarray, cfg: OptimizerConfig) -> NelderMeadResult:
    """Simplex run with fresh-simplex restarts at the found optimum.

    The stair-stepped objective (the basis size jumps with the scale
    ladder) can stall a single simplex on a plateau; rebuilding the simplex
    there routinely escapes.
    """
    res = nelder_mead(f, x0, cfg)
    for _ in range(max(0, cfg.n_restarts)):
        again = nelder_mead(f, res.x, cfg)
        improved = again.fun < res.fun - max(cfg.f_tol, 1e-12)
        again.iterations += res.iterations
        again.evaluations += res.evaluations
        if again.fun <= res.fun:
            res = again
        else:
            res.iterations = again.iterations
            res.evaluations = again.evaluations
        if not improved:
            break
    return res


def _start_points(f, x0: np.ndarray, cfg: OptimizerConfig, master):
    """Simplex starting points: x0 first, then the best coarse probes.

    Falls back to random perturbations of x0 when probing is disabled.
    """
    n_starts = max(1, cfg.n_starts)
    if n_starts == 1 or cfg.n_probes <= 0:
        extras = [x0 + master.uniform(-cfg.start_spread, cfg.start_spread,
                                      size=x0.size)
                  for _ in range(n_starts - 1)]
        return [x0] + extras, 0
    probes = x0 + master.uniform(-cfg.probe_spread, cfg.probe_spread,
                                 size=(cfg.n_probes, x0.size))
    scores = np.array([f(p) for p in probes])
    order = np.argsort(scores, kind="stable")
    starts = [x0] + [probes[i] for i in order[: n_starts - 1]]
    return starts, cfg.n_probes


def optimize_lml(data: Dataset, base: Hyperparameters, cfg: OptimizerConfig,
                 method: str = "D", cluster_seed: int | None = None
                 ) -> OptimizationReport:
    """Maximize the LML over ``cfg.free_params`` with multi-start simplex.

    All starts share one clustering seed (the objective stays a fixed
    function); start 0 begins at ``base``, later starts perturb it in the
    transformed space.
    """
    master = np.random.default_rng(cfg.seed)
    if cluster_seed is None:
        cluster_seed = int(master.integers(2**63))
    x0 = transform(base, cfg.free_params)

    def f(vec):
        hyper = untransform(vec, base, cfg.free_params)
        return objective(data, hyper, method, cluster_seed)

    starts, probe_evals = _start_points(f, x0, cfg, master)
    best = None
    total_iters = 0
    total_evals = probe_evals
    for xs in starts:
        res = _polish(f, xs, cfg)
        total_iters += res.iterations
        total_evals += res.evaluations
        if best is None or res.fun < best.fun:
            best = res

    best_hyper = untransform(best.x, base, cfg.free_params)
    model, cluster = build_model(data, best_hyper, method, cluster_seed)
    return OptimizationReport(
        best_hyper=best_hyper,
        best_lml=model.lml,
        iterations=total_iters,
        evaluations=total_evals,
        basis_size=cluster.total,
        termination=best.reason,
        cluster_seed=cluster_seed,
    )


def optimize_rbf_lml(data: Dataset, sigma0: float, lengthscale0: float,
                     cfg: OptimizerConfig, sigma_p: float = 1.0):
    """Maximize the classical RBF-kernel GP marginal likelihood.

    Optimizes (log sigma, log lengthscale) with the same multi-start
    simplex.  Returns ``(sigma, lengthscale, lml, evaluations)``.
    """

    def f(vec):
        s, ell = math.exp(vec[0]), math.exp(vec[1])
        try:
            return -train_rbf(data, s, ell, sigma_p).lml
        except (linalg.NotPositiveDefiniteError, linalg.AsymmetricInputError):
            return math.inf

    x0 = np.array([math.log(sigma0), math.log(lengthscale0)])
    master = np.random.default_rng(cfg.seed)
    best = None
    total_evals = 0
    for start in range(max(1, cfg.n_starts)):
        xs = x0 if start == 0 else x0 + master.uniform(
            -cfg.start_spread, cfg.start_spread, size=2)
        res = nelder_mead(f, xs, cfg)
        total_evals += res.evaluations
        if best is None or res.fun < best.fun:
            best = res
    return (math.exp(best.x[0]), math.exp(best.x[1]), -best.fun, total_evals)
