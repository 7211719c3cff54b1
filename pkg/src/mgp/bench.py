"""Benchmark harness: analytic experiments, scaling fits, equivalence suite.

Every experiment returns plain row dictionaries so the CLI can render a
table and write a machine-readable CSV.  Wall-clock figures are medians of
repeated runs with a discarded warm-up.  Scaling exponents come from
least-squares fits in log-log space and are reported with R^2.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .clustering import ScaleConfig
from .dataset import (Dataset, generate, grid_points, normalize,
                      normalized_error, nonuniform_step_abscissas,
                      sample_grid_indices, truth_function, SyntheticSpec)
from .hyperopt import (OptimizerConfig, build_model, optimize_lml,
                       optimize_rbf_lml, nelder_mead)
from .kernel import BasisSet, full_basis
from .regression import (Hyperparameters, predict_d, predict_mean_d,
                         predict_mean_n, predict_n, train_d, train_n)

DEFAULT_REPEATS = 5


def worker_count() -> int:
    """Worker cap from MGP_THREADS (0 or unset = auto)."""
    raw = os.environ.get("MGP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def predict_batch(model, points: np.ndarray, with_variance: bool = True,
                  workers: int | None = None):
    """Predict at many points; returns (means, variances or None).

    Fans out over point chunks when more than one worker is allowed;
    results keep input order regardless of scheduling.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    predict = predict_d if model.method == "D" else predict_n
    if workers is None:
        workers = worker_count()

    def run_chunk(chunk):
        out = [predict(model, q) for q in chunk]
        means = np.array([p.mean for p in out])
        if not with_variance:
            return means, None
        return means, np.array([p.variance for p in out])

    if workers <= 1 or points.shape[0] < 4 * workers:
        return run_chunk(points)
    chunks = np.array_split(points, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run_chunk, chunks))
    means = np.concatenate([p[0] for p in parts])
    variances = None if not with_variance else np.concatenate([p[1] for p in parts])
    return means, variances


def median_time(fn, repeats: int = DEFAULT_REPEATS) -> float:
    """Median wall-clock seconds of ``fn()`` over repeats, one warm-up."""
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def fit_exponent(sizes, times) -> tuple[float, float]:
    """Slope and R^2 of log(time) against log(size)."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(times, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


# --- synthetic train/test splits ------------------------------------------


def holdout_split(kind: str, n_train: int, noise: float, seed: int,
                  n_test: int = 2000):
    """Training set sampled from the uniform grid; test points from the rest.

    Returns ``(train, test_inputs, test_truth)`` with noiseless truth at the
    test points as the error reference.
    """
    rng = np.random.default_rng(seed)
    grid = grid_points()
    truth = truth_function(kind)
    train_idx = sample_grid_indices(n_train, rng)
    y = truth(grid[train_idx])
    if noise > 0:
        y = y + noise * rng.standard_normal(n_train)
    train = Dataset(grid[train_idx].reshape(-1, 1), y)

    mask = np.ones(grid.size, dtype=bool)
    mask[train_idx] = False
    pool = np.nonzero(mask)[0]
    if pool.size > n_test:
        pick = np.linspace(0, pool.size - 1, n_test).round().astype(int)
        pool = pool[pick]
    test_q = grid[pool].reshape(-1, 1)
    return train, test_q, truth(grid[pool])


def nonuniform_split(n_train: int, h_t: float, noise: float, seed: int,
                     n_test: int = 2001):
    """Exponentially-dense training points near the jump; uniform test grid."""
    rng = np.random.default_rng(seed)
    q = nonuniform_step_abscissas(n_train, h_t)
    truth = truth_function("nonuniform_step")
    y = truth(q)
    if noise > 0:
        y = y + noise * rng.standard_normal(n_train)
    train = Dataset(q.reshape(-1, 1), y)
    test_q = np.linspace(0.0, 1.0, n_test).reshape(-1, 1)
    return train, test_q, truth(test_q.ravel())


# --- model fitting pipelines ----------------------------------------------


def default_hyper(n_scales: int = 1) -> Hyperparameters:
    """Initial guess for the optimizer on [0,1]-normalized data."""
    return Hyperparameters(
        sigma=0.1, sigma_p=1.0,
        scale_cfg=ScaleConfig(h1=0.3, beta=0.5, n_scales=n_scales, gamma=0.3),
    )


def fit_mgp(train: Dataset, n_scales: int = 1, seed: int = 0,
            method: str = "D", optimize: bool = True,
            base: Hyperparameters | None = None,
            opt_cfg: OptimizerConfig | None = None):
    """Normalize, optionally optimize hyperparameters, train a sparse model.

    Returns ``(model, stats, report)``; ``report`` is None when
    ``optimize`` is False.
    """
    norm_data, stats = normalize(train)
    if base is None:
        base = default_hyper(n_scales)
    if opt_cfg is None:
        free = ("sigma", "h1", "gamma") if n_scales == 1 else \
               ("sigma", "h1", "beta", "gamma")
        opt_cfg = OptimizerConfig(free_params=free, seed=seed)
    report = None
    hyper = base
    cluster_seed = seed
    if optimize:
        report = optimize_lml(norm_data, base, opt_cfg, method=method)
        hyper = report.best_hyper
        cluster_seed = report.cluster_seed
    model, _ = build_model(norm_data, hyper, method, cluster_seed, norm=stats)
    return model, stats, report


def fit_full_gp(train: Dataset, seed: int = 0, sigma0: float = 0.1,
                h0: float = 0.1, opt_cfg: OptimizerConfig | None = None):
    """Dense reference fit: every training point a center (D = N).

    Optimizes (sigma, h) for the function-space path over the normalized
    data and returns ``(model, stats, lml)``.
    """
    norm_data, stats = normalize(train)
    if opt_cfg is None:
        opt_cfg = OptimizerConfig(free_params=("sigma", "h1"), seed=seed,
                                  max_iters=200, n_starts=2)

    def f(vec):
        sigma, h = math.exp(vec[0]), math.exp(vec[1])
        try:
            hyper = Hyperparameters(sigma=sigma, sigma_p=1.0,
                                    scale_cfg=ScaleConfig(h1=h))
            return -train_n(norm_data, full_basis(norm_data, h), hyper).lml
        except Exception:
            return math.inf

    x0 = np.array([math.log(sigma0), math.log(h0)])
    rng = np.random.default_rng(opt_cfg.seed)
    best = None
    for start in range(max(1, opt_cfg.n_starts)):
        xs = x0 if start == 0 else x0 + rng.uniform(
            -opt_cfg.start_spread, opt_cfg.start_spread, size=2)
        res = nelder_mead(f, xs, opt_cfg)
        if best is None or res.fun < best.fun:
            best = res
    sigma, h = math.exp(best.x[0]), math.exp(best.x[1])
    hyper = Hyperparameters(sigma=sigma, sigma_p=1.0,
                            scale_cfg=ScaleConfig(h1=h))
    model = train_n(norm_data, full_basis(norm_data, h), hyper, norm=stats)
    return model, stats, model.lml


def test_error(model, stats, test_q: np.ndarray, test_truth: np.ndarray
               ) -> float:
    """Normalized prediction error in original units."""
    q_norm = stats.normalize_inputs(test_q)
    means, _ = predict_batch(model, q_norm, with_variance=False)
    return normalized_error(stats.denormalize_mean(means), test_truth)


# --- experiments -----------------------------------------------------------


def sweep_experiment(kind: str, sizes, noise: float, seed: int,
                     n_scales: int = 1, n_test: int = 2000,
                     with_full_gp: bool = True) -> list[dict]:
    """Accuracy/size/time sweep over N for one analytic problem.

    Per size: the sparse fit (optimized, weight-space path) and optionally
    the dense D = N reference.
    """
    rows = []
    for n in sizes:
        train, test_q, test_truth = holdout_split(kind, n, noise, seed, n_test)
        t0 = time.perf_counter()
        model, stats, report = fit_mgp(train, n_scales=n_scales, seed=seed)
        fit_time = time.perf_counter() - t0
        row = {
            "experiment": kind,
            "n_train": n,
            "basis_size": model.basis.size,
            "error": test_error(model, stats, test_q, test_truth),
            "lml": model.lml,
            "fit_time": fit_time,
            "sigma_opt": model.hyper.sigma,
            "h1_opt": model.hyper.scale_cfg.h1,
            "gamma_opt": model.hyper.scale_cfg.gamma,
        }
        if with_full_gp:
            t0 = time.perf_counter()
            full_model, full_stats, _ = fit_full_gp(train, seed=seed)
            row["full_fit_time"] = time.perf_counter() - t0
            row["full_error"] = test_error(full_model, full_stats, test_q,
                                           test_truth)
            row["full_sigma_opt"] = full_model.hyper.sigma
            row["full_h_opt"] = full_model.hyper.scale_cfg.h1
        rows.append(row)
    return rows


def nonuniform_experiment(n_train: int = 101, h_t: float = 0.1,
                          noise: float = 0.03, seed: int = 0,
                          scale_counts=(1, 6)) -> list[dict]:
    """Multiscale vs single-scale fit of the non-uniformly sampled step."""
    train, test_q, test_truth = nonuniform_split(n_train, h_t, noise, seed)
    rows = []
    for s in scale_counts:
        model, stats, report = fit_mgp(train, n_scales=s, seed=seed)
        cfg = model.hyper.scale_cfg
        rows.append({
            "experiment": "nonuniform_step",
            "n_scales": s,
            "n_train": n_train,
            "basis_size": model.basis.size,
            "error": test_error(model, stats, test_q, test_truth),
            "lml": model.lml,
            "sigma_opt": model.hyper.sigma,
            "h_max": cfg.scale(1),
            "h_min": cfg.scale(s),
            "beta_opt": cfg.beta,
            "gamma_opt": cfg.gamma,
        })
    return rows


def scaling_grid_basis(size: int, h: float, dim: int = 1) -> BasisSet:
    """Fixed-size single-scale basis on a uniform grid (timing harness)."""
    grid = np.linspace(0.05, 0.95, size)
    if dim != 1:
        raise ValueError("scaling harness is 1-D")
    return BasisSet(grid.reshape(-1, 1), np.full(size, h))


def scaling_experiment(sizes=(512, 1024, 2048, 4096), basis_size: int = 32,
                       h: float = 0.15, sigma: float = 0.1, seed: int = 0,
                       repeats: int = DEFAULT_REPEATS,
                       n_predict: int = 64) -> dict:
    """Wall-clock scaling of both paths at fixed hyperparameters.

    Times training and per-point prediction (mean alone, then mean plus
    variance) for each N, then fits log-log exponents of the train times.
    """
    basis = scaling_grid_basis(basis_size, h)
    hyper = Hyperparameters(sigma=sigma, sigma_p=1.0,
                            scale_cfg=ScaleConfig(h1=h))
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        spec = SyntheticSpec(kind="varfreq_sine", n_points=n,
                             noise_sigma=sigma, seed=int(rng.integers(2**63)))
        data = generate(spec)
        t_train_d = median_time(lambda: train_d(data, basis, hyper), repeats)
        t_train_n = median_time(lambda: train_n(data, basis, hyper), repeats)
        model_d = train_d(data, basis, hyper)
        model_n = train_n(data, basis, hyper)
        test_pts = rng.uniform(0, 1, size=(n_predict, 1))

        def mean_d():
            for q in test_pts:
                predict_mean_d(model_d, q)

        def mean_n():
            for q in test_pts:
                predict_mean_n(model_n, q)

        def var_d():
            for q in test_pts:
                predict_d(model_d, q)

        def var_n():
            for q in test_pts:
                predict_n(model_n, q)

        t_mean_d = median_time(mean_d, repeats) / n_predict
        t_mean_n = median_time(mean_n, repeats) / n_predict
        t_var_d = median_time(var_d, repeats) / n_predict
        t_var_n = median_time(var_n, repeats) / n_predict
        rows.append({
            "experiment": "scaling", "n_train": n, "basis_size": basis_size,
            "train_time_d": t_train_d, "train_time_n": t_train_n,
            "predict_mean_d": t_mean_d, "predict_mean_n": t_mean_n,
            "predict_var_d": t_var_d, "predict_var_n": t_var_n,
        })
    ns = [r["n_train"] for r in rows]
    exp_d, r2_d = fit_exponent(ns, [r["train_time_d"] for r in rows])
    exp_n, r2_n = fit_exponent(ns, [r["train_time_n"] for r in rows])
    return {
        "rows": rows,
        "train_exponent_d": exp_d, "train_r2_d": r2_d,
        "train_exponent_n": exp_n, "train_r2_n": r2_n,
        "mean_time_ratio_d": max(r["predict_mean_d"] for r in rows)
        / min(r["predict_mean_d"] for r in rows),
        "mean_time_growth_n": rows[-1]["predict_mean_n"] / rows[0]["predict_mean_n"],
    }


# --- random instances for the equivalence and identity suites -------------


def random_instance(rng: np.random.Generator, n_max: int = 64,
                    d_max: int = 3):
    """Random (data, basis, hyper) triple with D <= N and mixed scales."""
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    inputs = rng.uniform(0, 1, size=(n, d))
    targets = rng.standard_normal(n)
    data = Dataset(inputs, targets)
    n_basis = int(rng.integers(1, n + 1))
    rows = rng.choice(n, size=n_basis, replace=False)
    scales = rng.uniform(0.15, 1.5, size=n_basis)
    basis = BasisSet(inputs[rows].copy(), scales)
    lo, hi = math.log(0.01), math.log(1.0)
    hyper = Hyperparameters(
        sigma=float(np.exp(rng.uniform(lo, hi))),
        sigma_p=float(rng.uniform(0.5, 2.0)),
        scale_cfg=ScaleConfig(h1=1.0),
    )
    return data, basis, hyper


def equivalence_suite(n_instances: int = 100, seed: int = 0,
                      n_test_points: int = 5) -> dict:
    """Dual-path agreement over random instances.

    Returns the max relative mean/variance discrepancies and max absolute
    LML discrepancy across instances.
    """
    rng = np.random.default_rng(seed)
    max_mean = max_var = max_lml = 0.0
    for _ in range(n_instances):
        data, basis, hyper = random_instance(rng)
        model_d = train_d(data, basis, hyper, jitter_policy=None)
        model_n = train_n(data, basis, hyper, jitter_policy=None)
        max_lml = max(max_lml, abs(model_d.lml - model_n.lml))
        for _ in range(n_test_points):
            q = rng.uniform(-0.2, 1.2, size=data.dim_in)
            pd = predict_d(model_d, q)
            pn = predict_n(model_n, q)
            max_mean = max(max_mean,
                           abs(pd.mean - pn.mean) / (1.0 + abs(pn.mean)))
            max_var = max(max_var,
                          abs(pd.variance - pn.variance) / (1.0 + pn.variance))
    return {"max_mean_resid": max_mean, "max_var_resid": max_var,
            "max_lml_resid": max_lml, "instances": n_instances}


def width_ratio_experiment(n_train: int = 128, noise: float = 0.1,
                           seed: int = 0) -> dict:
    """Optimal kernel-GP lengthscale vs optimal basis width on the step.

    The dense-center limit maps a basis of width h onto a Gaussian kernel
    of lengthscale h / sqrt(2); equivalently the kernel Gaussians are
    sqrt(2) wider.  Reported ratio: sqrt(2) * lengthscale / h1.
    """
    train, _, _ = holdout_split("step", n_train, noise, seed)
    norm_data, _ = normalize(train)
    model, stats, report = fit_mgp(train, n_scales=1, seed=seed)
    h1 = model.hyper.scale_cfg.h1
    cfg = OptimizerConfig(free_params=("sigma", "h1"), seed=seed + 1,
                          max_iters=200, n_starts=3)
    sigma_k, ell, lml_k, _ = optimize_rbf_lml(norm_data, 0.1, 0.1, cfg)
    return {
        "h1_weight_space": h1,
        "lengthscale_kernel": ell,
        "kernel_width": math.sqrt(2.0) * ell,
        "ratio": math.sqrt(2.0) * ell / h1,
        "sigma_weight_space": model.hyper.sigma,
        "sigma_kernel": sigma_k,
        "basis_size": model.basis.size,
    }


def noise_recovery_experiment(noise_levels=(0.1, 0.01), n_train: int = 128,
                              n_seeds: int = 10, seed: int = 0) -> list[dict]:
    """Recovered vs generating noise std on the step problem."""
    rows = []
    for level in noise_levels:
        for k in range(n_seeds):
            train, _, _ = holdout_split("step", n_train, level, seed + k)
            model, _, _ = fit_mgp(train, n_scales=1, seed=seed + k)
            stats_sigma = model.hyper.sigma * model.norm.target_range
            rows.append({
                "noise": level, "seed": seed + k,
                "sigma_opt": stats_sigma,
                "factor": stats_sigma / level,
                "basis_size": model.basis.size,
            })
    return rows
