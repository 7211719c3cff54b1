"""Versioned text serialization of trained models.

Line-oriented ``key value...`` format with all reals printed at 17
significant digits, which round-trips IEEE doubles exactly: a loaded model
predicts bit-identically to the one that was saved.  Files are written
atomically (temp file + rename).
"""

import os
import tempfile

import numpy as np

from .clustering import ScaleConfig
from .dataset import NormalizationStats
from .kernel import BasisSet
from .linalg import CholeskyFactor
from .regression import Hyperparameters, MethodDModel, MethodNModel

FORMAT_NAME = "mgp-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Malformed model file."""


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _fmt_row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _write_tri(fh, lower: np.ndarray) -> None:
    for i in range(lower.shape[0]):
        fh.write(_fmt_row(lower[i, : i + 1]) + "\n")


def save_model(model, path) -> None:
    """Serialize a trained model (either path) to ``path`` atomically."""
    if isinstance(model, MethodDModel):
        method = "D"
    elif isinstance(model, MethodNModel):
        method = "N"
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    hyper = model.hyper
    cfg = hyper.scale_cfg
    basis = model.basis

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mgp-model-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(f"{FORMAT_NAME} {FORMAT_VERSION}\n")
            fh.write(f"method {method}\n")
            fh.write(f"dim_in {basis.dim}\n")
            fh.write(f"n_train {model.n_train}\n")
            fh.write(f"basis_size {basis.size}\n")
            fh.write(f"n_scales {cfg.n_scales}\n")
            for name in ("sigma", "sigma_p"):
                fh.write(f"{name} {_fmt(getattr(hyper, name))}\n")
            for name in ("h1", "beta", "gamma"):
                fh.write(f"{name} {_fmt(getattr(cfg, name))}\n")
            fh.write(f"lml {_fmt(model.lml)}\n")
            if model.norm is not None:
                fh.write("norm 1\n")
                fh.write("input_min " + _fmt_row(model.norm.input_min) + "\n")
                fh.write("input_range " + _fmt_row(model.norm.input_range) + "\n")
                fh.write(f"target_min {_fmt(model.norm.target_min)}\n")
                fh.write(f"target_range {_fmt(model.norm.target_range)}\n")
            else:
                fh.write("norm 0\n")
            # centers: d coordinates then the 1-based scale index
            scale_idx = _scale_indices(basis, cfg)
            fh.write("centers\n")
            for j in range(basis.size):
                fh.write(_fmt_row(basis.centers[j]) + f" {scale_idx[j]}\n")
            if method == "D":
                fh.write(f"jitter {_fmt(model.chol_precision.jitter)}\n")
                fh.write("weights\n")
                fh.write(_fmt_row(model.weights) + "\n")
                fh.write("chol\n")
                _write_tri(fh, model.chol_precision.lower)
            else:
                fh.write(f"jitter {_fmt(model.chol_cov.jitter)}\n")
                fh.write("alpha\n")
                fh.write(_fmt_row(model.alpha) + "\n")
                fh.write("chol\n")
                _write_tri(fh, model.chol_cov.lower)
                fh.write("training_inputs\n")
                for i in range(model.n_train):
                    fh.write(_fmt_row(model.training_inputs[i]) + "\n")
        os.replace(tmp, path)
        tmp = None
    finally:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)


def _scale_indices(basis: BasisSet, cfg: ScaleConfig) -> np.ndarray:
    """Recover each center's 1-based scale index from its width."""
    ladder = cfg.h1 * cfg.beta ** (np.arange(1, cfg.n_scales + 1, dtype=np.intp) - 1)
    idx = np.empty(basis.size, dtype=np.intp)
    for j, h in enumerate(basis.scales):
        matches = np.nonzero(ladder == h)[0]
        if matches.size == 0:
            matches = [int(np.argmin(np.abs(ladder - h)))]
        idx[j] = matches[0] + 1
    return idx


class _Reader:
    def __init__(self, path):
        with open(path, "r", encoding="utf-8") as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def next(self) -> list:
        if self.pos >= len(self.lines):
            raise ModelFormatError("unexpected end of model file")
        fields = self.lines[self.pos].split()
        self.pos += 1
        return fields

    def keyed(self, key: str) -> list:
        fields = self.next()
        if not fields or fields[0] != key:
            raise ModelFormatError(f"expected '{key}' at line {self.pos}")
        return fields[1:]

    def scalar(self, key: str) -> float:
        vals = self.keyed(key)
        if len(vals) != 1:
            raise ModelFormatError(f"'{key}' takes one value (line {self.pos})")
        return float(vals[0])


def load_model(path):
    """Load a model file; returns a MethodDModel or MethodNModel."""
    r = _Reader(path)
    header = r.next()
    if header[:1] != [FORMAT_NAME] or len(header) != 2:
        raise ModelFormatError("not a model file")
    if int(header[1]) != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {header[1]}")
    method = r.keyed("method")[0]
    if method not in ("D", "N"):
        raise ModelFormatError(f"unknown method tag {method!r}")
    dim_in = int(r.scalar("dim_in"))
    n_train = int(r.scalar("n_train"))
    basis_size = int(r.scalar("basis_size"))
    n_scales = int(r.scalar("n_scales"))
    sigma = r.scalar("sigma")
    sigma_p = r.scalar("sigma_p")
    h1 = r.scalar("h1")
    beta = r.scalar("beta")
    gamma = r.scalar("gamma")
    lml = r.scalar("lml")
    cfg = ScaleConfig(h1=h1, beta=beta, n_scales=n_scales, gamma=gamma)
    hyper = Hyperparameters(sigma=sigma, sigma_p=sigma_p, scale_cfg=cfg)

    norm = None
    if int(r.scalar("norm")):
        input_min = np.array([float(v) for v in r.keyed("input_min")])
        input_range = np.array([float(v) for v in r.keyed("input_range")])
        target_min = r.scalar("target_min")
        target_range = r.scalar("target_range")
        norm = NormalizationStats(input_min, input_range, target_min, target_range)

    r.keyed("centers")
    centers = np.empty((basis_size, dim_in))
    scale_idx = np.empty(basis_size, dtype=np.intp)
    for j in range(basis_size):
        fields = r.next()
        if len(fields) != dim_in + 1:
            raise ModelFormatError(f"center row {j} malformed (line {r.pos})")
        centers[j] = [float(v) for v in fields[:dim_in]]
        scale_idx[j] = int(fields[dim_in])
    scales = cfg.h1 * cfg.beta ** (scale_idx - 1)
    basis = BasisSet(centers, scales)
    jitter = r.scalar("jitter")

    if method == "D":
        r.keyed("weights")
        weights = np.array([float(v) for v in r.next()])
        r.keyed("chol")
        lower = _read_tri(r, basis_size)
        return MethodDModel(basis=basis,
                            chol_precision=CholeskyFactor(lower, jitter=jitter),
                            weights=weights, hyper=hyper, lml=lml,
                            n_train=n_train, norm=norm)

    r.keyed("alpha")
    alpha = np.array([float(v) for v in r.next()])
    r.keyed("chol")
    lower = _read_tri(r, n_train)
    r.keyed("training_inputs")
    inputs = np.empty((n_train, dim_in))
    for i in range(n_train):
        inputs[i] = [float(v) for v in r.next()]
    return MethodNModel(basis=basis, chol_cov=CholeskyFactor(lower, jitter=jitter),
                        alpha=alpha, training_inputs=inputs, hyper=hyper,
                        lml=lml, norm=norm)


def _read_tri(r: _Reader, n: int) -> np.ndarray:
    lower = np.zeros((n, n))
    for i in range(n):
        row = [float(v) for v in r.next()]
        if len(row) != i + 1:
            raise ModelFormatError(f"triangle row {i} has {len(row)} entries")
        lower[i, : i + 1] = row
    return lower
