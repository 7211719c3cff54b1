"""Command-line surface: generate, cluster, train, predict, bench.

Exit codes: 0 success, 1 usage/validation error, 2 I/O error, 3 numerical
failure (unrecoverable factorization).  Output files are written atomically
(temp file + rename).
"""

import argparse
import os
import sys
import tempfile

import numpy as np

from . import bench, linalg, modelio
from .clustering import ScaleConfig, cluster_multiscale
from .dataset import (CsvFormatError, SyntheticSpec, generate, load_csv,
                      normalize, save_csv)
from .hyperopt import OptimizerConfig, build_model, optimize_lml
from .regression import Hyperparameters

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so we own the exit code."""

    def error(self, message):
        raise UsageError(message)


def _atomic_write(path, write_fn):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mgp-out-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            write_fn(fh)
        os.replace(tmp, path)
        tmp = None
    finally:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mgp",
                     description="Multiscale sparse GP regression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset CSV")
    g.add_argument("--kind", required=True,
                   choices=("step", "nonuniform_step", "varfreq_sine"))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--h-t", type=float, default=0.1,
                   help="density scale for nonuniform_step")
    g.add_argument("--out", required=True)

    c = sub.add_parser("cluster", help="emit cluster centers as CSV")
    c.add_argument("--input", required=True)
    c.add_argument("--h1", type=float, required=True)
    c.add_argument("--beta", type=float, default=0.5)
    c.add_argument("--scales", type=int, default=1, dest="n_scales")
    c.add_argument("--gamma", type=float, default=0.3)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--normalize", action="store_true",
                   help="cluster in [0,1]-normalized input space")
    c.add_argument("--out", required=True)

    t = sub.add_parser("train", help="cluster, optionally optimize, train")
    t.add_argument("--input", required=True)
    t.add_argument("--method", choices=("D", "N"), default="D")
    t.add_argument("--scales", type=int, default=1, dest="n_scales")
    t.add_argument("--h1", type=float, default=0.3)
    t.add_argument("--beta", type=float, default=0.5)
    t.add_argument("--gamma", type=float, default=0.3)
    t.add_argument("--sigma", type=float, default=0.1)
    t.add_argument("--sigma-p", type=float, default=1.0)
    t.add_argument("--optimize", action="store_true")
    t.add_argument("--optimize-sigma-p", action="store_true",
                   help="include sigma_p among the optimized parameters")
    t.add_argument("--max-iters", type=int, default=500)
    t.add_argument("--starts", type=int, default=3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--allow-large", action="store_true",
                   help="lift the N guard on the function-space path")
    t.add_argument("--out-model", required=True)

    p = sub.add_parser("predict", help="batch prediction to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--with-variance", action="store_true")

    b = sub.add_parser("bench", help="benchmark experiments")
    b.add_argument("experiment",
                   choices=("step", "nonuniform-step", "sine", "scaling",
                            "equivalence"))
    b.add_argument("--sizes", type=int, nargs="+",
                   default=[128, 256, 512, 1024])
    b.add_argument("--noise", type=float, default=0.1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--scales", type=int, default=1, dest="n_scales")
    b.add_argument("--basis-size", type=int, default=32,
                   help="fixed D for the scaling experiment")
    b.add_argument("--instances", type=int, default=100,
                   help="random instances for the equivalence experiment")
    b.add_argument("--no-full-gp", action="store_true",
                   help="skip the dense D=N reference in sweeps")
    b.add_argument("--out-csv", default=None)
    return parser


def cmd_generate(args) -> int:
    spec = SyntheticSpec(kind=args.kind, n_points=args.n,
                         noise_sigma=args.noise, seed=args.seed, h_t=args.h_t)
    data = generate(spec)
    _atomic_write(args.out, lambda fh: _write_dataset(fh, data))
    print(f"wrote {data.count} rows (d={data.dim_in}) to {args.out}")
    return EXIT_OK


def _write_dataset(fh, data):
    for i in range(data.count):
        fields = [f"{v:.17g}" for v in data.inputs[i]]
        fields.append(f"{data.targets[i]:.17g}")
        fh.write(",".join(fields) + "\n")


def cmd_cluster(args) -> int:
    data = load_csv(args.input)
    cfg = ScaleConfig(h1=args.h1, beta=args.beta, n_scales=args.n_scales,
                      gamma=args.gamma)
    inputs = data.inputs
    if args.normalize:
        _, stats = normalize(data)
        inputs = stats.normalize_inputs(data.inputs)
    rng = np.random.default_rng(args.seed)
    result = cluster_multiscale(inputs, cfg, rng)

    def write(fh):
        for j in range(result.total):
            fields = [f"{v:.17g}" for v in result.centers[j]]
            fields.append(str(int(result.scale_indices[j])))
            fields.append(str(int(result.source_rows[j])))
            fh.write(",".join(fields) + "\n")

    _atomic_write(args.out, write)
    counts = ", ".join(f"k_{s + 1}={int(k)}"
                       for s, k in enumerate(result.per_scale_counts))
    print(f"selected {result.total} centers from {data.count} points ({counts})")
    return EXIT_OK


def cmd_train(args) -> int:
    data = load_csv(args.input)
    norm_data, stats = normalize(data)
    hyper = Hyperparameters(
        sigma=args.sigma, sigma_p=args.sigma_p,
        scale_cfg=ScaleConfig(h1=args.h1, beta=args.beta,
                              n_scales=args.n_scales, gamma=args.gamma))
    cluster_seed = args.seed
    report = None
    if args.optimize:
        free = ["sigma", "h1", "gamma"]
        if args.n_scales > 1:
            free.append("beta")
        if args.optimize_sigma_p:
            free.append("sigma_p")
        cfg = OptimizerConfig(free_params=tuple(free), seed=args.seed,
                              max_iters=args.max_iters, n_starts=args.starts)
        report = optimize_lml(norm_data, hyper, cfg, method=args.method)
        hyper = report.best_hyper
        cluster_seed = report.cluster_seed
    train_kwargs = {"norm": stats}
    if args.method == "N":
        train_kwargs["allow_large"] = args.allow_large
    model, result = build_model(norm_data, hyper, args.method, cluster_seed,
                                **train_kwargs)
    modelio.save_model(model, args.out_model)

    factor = model.chol_precision if args.method == "D" else model.chol_cov
    counts = ", ".join(f"k_{s + 1}={int(k)}"
                       for s, k in enumerate(result.per_scale_counts))
    print(f"method {args.method}: N={data.count} D={model.basis.size} ({counts})")
    print(f"lml={model.lml:.6f} sigma={hyper.sigma:.6g} "
          f"h1={hyper.scale_cfg.h1:.6g} beta={hyper.scale_cfg.beta:.6g} "
          f"gamma={hyper.scale_cfg.gamma:.6g} sigma_p={hyper.sigma_p:.6g}")
    if report is not None:
        print(f"optimizer: {report.evaluations} evaluations, "
              f"terminated by {report.termination}")
    if factor.jitter:
        print(f"jitter applied: {factor.jitter:.3e}")
    print(f"model written to {args.out_model}")
    return EXIT_OK


def _load_inputs(path, dim_in):
    """Prediction inputs: d columns, or d+1 with the target column ignored."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split(",")
            if width is None:
                width = len(fields)
                if width not in (dim_in, dim_in + 1):
                    raise UsageError(
                        f"model expects {dim_in} input columns, file has "
                        f"{width} (line {lineno})")
            elif len(fields) != width:
                raise CsvFormatError(
                    f"ragged row: expected {width} fields, got "
                    f"{len(fields)}, line {lineno}")
            try:
                rows.append([float(v) for v in fields[:dim_in]])
            except ValueError:
                raise CsvFormatError(f"non-numeric field, line {lineno}") from None
    if not rows:
        return np.empty((0, dim_in))
    return np.asarray(rows)


def cmd_predict(args) -> int:
    model = modelio.load_model(args.model)
    inputs = _load_inputs(args.input, model.basis.dim)
    if inputs.shape[0] == 0:
        _atomic_write(args.out, lambda fh: None)
        print("empty input, wrote empty output")
        return EXIT_OK
    stats = model.norm
    q = inputs if stats is None else stats.normalize_inputs(inputs)
    means, variances = bench.predict_batch(model, q,
                                           with_variance=args.with_variance)
    if stats is not None:
        means = stats.denormalize_mean(means)
        if variances is not None:
            variances = stats.denormalize_variance(variances)

    def write(fh):
        for i in range(inputs.shape[0]):
            fields = [f"{v:.17g}" for v in inputs[i]]
            fields.append(f"{means[i]:.17g}")
            if variances is not None:
                fields.append(f"{variances[i]:.17g}")
            fh.write(",".join(fields) + "\n")

    _atomic_write(args.out, write)
    print(f"predicted {inputs.shape[0]} points -> {args.out}")
    return EXIT_OK


def _print_table(rows):
    if not rows:
        return
    keys = list(rows[0].keys())
    widths = {k: max(len(k), *(len(_cell(r.get(k))) for r in rows))
              for k in keys}
    print("  ".join(k.ljust(widths[k]) for k in keys))
    for r in rows:
        print("  ".join(_cell(r.get(k)).ljust(widths[k]) for k in keys))


def _cell(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _write_rows_csv(path, rows):
    keys = list(rows[0].keys())

    def write(fh):
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(
                f"{v:.17g}" if isinstance(v, float) else str(v)
                for v in (r.get(k) for k in keys)) + "\n")

    _atomic_write(path, write)


def cmd_bench(args) -> int:
    if args.experiment in ("step", "sine"):
        kind = "step" if args.experiment == "step" else "varfreq_sine"
        rows = bench.sweep_experiment(kind, args.sizes, args.noise, args.seed,
                                      n_scales=args.n_scales,
                                      with_full_gp=not args.no_full_gp)
    elif args.experiment == "nonuniform-step":
        rows = bench.nonuniform_experiment(noise=args.noise, seed=args.seed)
    elif args.experiment == "scaling":
        result = bench.scaling_experiment(sizes=tuple(args.sizes),
                                          basis_size=args.basis_size,
                                          seed=args.seed)
        rows = result["rows"]
        print(f"train exponent D: {result['train_exponent_d']:.3f} "
              f"(R^2 {result['train_r2_d']:.3f})")
        print(f"train exponent N: {result['train_exponent_n']:.3f} "
              f"(R^2 {result['train_r2_n']:.3f})")
        print(f"predict-mean time ratio D (max/min): "
              f"{result['mean_time_ratio_d']:.2f}")
        print(f"predict-mean time growth N: {result['mean_time_growth_n']:.2f}x")
    else:
        summary = bench.equivalence_suite(n_instances=args.instances,
                                          seed=args.seed)
        rows = [summary]
    _print_table(rows)
    if args.out_csv:
        _write_rows_csv(args.out_csv, rows)
        print(f"csv written to {args.out_csv}")
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "cluster": cmd_cluster,
    "train": cmd_train,
    "predict": cmd_predict,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except linalg.NotPositiveDefiniteError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CsvFormatError, modelio.ModelFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
