"""Dataset ingestion, normalization, synthetic generators and error metrics.

Datasets are plain containers: an ``(N, d)`` design matrix of inputs plus a
length-``N`` target vector.  Synthetic 1-D test problems (step function,
non-uniformly sampled step, varying-frequency sine) are generated from a
seeded PRNG so that identical specs produce bit-identical data.
"""

import math
from dataclasses import dataclass

import numpy as np

GRID_SIZE = 10000  # sampling pool for grid-sampled synthetic kinds

SYNTHETIC_KINDS = ("step", "nonuniform_step", "varfreq_sine")


class CsvFormatError(ValueError):
    """Malformed CSV content (ragged row, non-numeric field, empty file)."""


@dataclass(frozen=True)
class Dataset:
    """Immutable regression dataset: inputs ``(N, d)``, targets ``(N,)``."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        targets = np.asarray(self.targets, dtype=float).ravel()
        if inputs.shape[0] != targets.shape[0]:
            raise ValueError(
                f"inputs have {inputs.shape[0]} rows but targets have "
                f"{targets.shape[0]} entries"
            )
        if inputs.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if not (np.isfinite(inputs).all() and np.isfinite(targets).all()):
            raise ValueError("dataset contains non-finite entries")
        inputs.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @property
    def count(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim_in(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class NormalizationStats:
    """Affine maps taking each input column and the target to [0, 1].

    A zero range marks a constant column; such columns map to 0 and
    de-normalization restores the constant.
    """

    input_min: np.ndarray
    input_range: np.ndarray
    target_min: float
    target_range: float

    def __post_init__(self):
        object.__setattr__(self, "input_min", np.asarray(self.input_min, dtype=float))
        object.__setattr__(self, "input_range", np.asarray(self.input_range, dtype=float))
        if (self.input_range < 0).any() or self.target_range < 0:
            raise ValueError("ranges must be nonnegative")

    def normalize_inputs(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(np.asarray(q, dtype=float))
        rng = np.where(self.input_range > 0, self.input_range, 1.0)
        out = (q - self.input_min) / rng
        out[:, self.input_range == 0] = 0.0
        return out

    def denormalize_inputs(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(np.asarray(q, dtype=float))
        return q * self.input_range + self.input_min

    def normalize_targets(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.target_range == 0:
            return np.zeros_like(y)
        return (y - self.target_min) / self.target_range

    def denormalize_mean(self, m):
        return m * self.target_range + self.target_min

    def denormalize_variance(self, v):
        # variance scales with the square of the target map
        return v * self.target_range**2


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic 1-D dataset.

    ``h_t`` controls the exponential point density of ``nonuniform_step``
    (sampling map ``q = 0.5 +- h_t * ln z``) and is ignored by other kinds.
    """

    kind: str
    n_points: int
    noise_sigma: float = 0.0
    seed: int = 0
    h_t: float = 0.1

    def __post_init__(self):
        if self.kind not in SYNTHETIC_KINDS:
            raise ValueError(f"unknown synthetic kind {self.kind!r}")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.h_t <= 0:
            raise ValueError("h_t must be > 0")


def step_fn(q: np.ndarray) -> np.ndarray:
    """Unit step with jump at 0.5: 1 where q > 0.5, else 0."""
    return (np.asarray(q, dtype=float) > 0.5).astype(float)


def varfreq_sine_fn(q: np.ndarray) -> np.ndarray:
    """Sine with position-dependent frequency: sin(2*pi*q*(4q+1)^1.5)."""
    q = np.asarray(q, dtype=float)
    return np.sin(2.0 * np.pi * q * (4.0 * q + 1.0) ** 1.5)


def truth_function(kind: str):
    """Noiseless target function for a synthetic kind."""
    if kind in ("step", "nonuniform_step"):
        return step_fn
    if kind == "varfreq_sine":
        return varfreq_sine_fn
    raise ValueError(f"unknown synthetic kind {kind!r}")


def grid_points(n: int = GRID_SIZE) -> np.ndarray:
    """Uniform grid on [0, 1] used as the sampling pool."""
    return np.linspace(0.0, 1.0, n)


def sample_grid_indices(n_points: int, rng: np.random.Generator,
                        grid_size: int = GRID_SIZE) -> np.ndarray:
    """Sorted sample of ``n_points`` grid indices drawn without replacement."""
    if n_points > grid_size:
        raise ValueError(
            f"n_points={n_points} exceeds the {grid_size}-point sampling grid"
        )
    return np.sort(rng.choice(grid_size, size=n_points, replace=False))


def nonuniform_step_abscissas(n_points: int, h_t: float) -> np.ndarray:
    """Points with exponential density toward the jump at 0.5.

    Built from ``q = 0.5 +- h_t * ln z`` with ``z`` on a uniform grid over
    ``[exp(-0.5/h_t), 1]``; the two branches share q = 0.5.  For even
    ``n_points`` the largest point is dropped (grid truncation).
    """
    m = (n_points + 2) // 2
    z = np.linspace(math.exp(-0.5 / h_t), 1.0, m)
    lower = 0.5 + h_t * np.log(z)        # ascending, ends at 0.5
    upper = 0.5 - h_t * np.log(z)        # starts at 1 - ..., ends at 0.5
    q = np.concatenate([lower[:-1], [0.5], upper[::-1][1:]])
    return q[:n_points]


def generate(spec: SyntheticSpec) -> Dataset:
    """Generate a synthetic dataset; deterministic given the spec."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "nonuniform_step":
        q = nonuniform_step_abscissas(spec.n_points, spec.h_t)
    else:
        idx = sample_grid_indices(spec.n_points, rng)
        q = grid_points()[idx]
    y = truth_function(spec.kind)(q)
    if spec.noise_sigma > 0:
        y = y + spec.noise_sigma * rng.standard_normal(spec.n_points)
    return Dataset(q.reshape(-1, 1), y)


def load_csv(path) -> Dataset:
    """Load a dataset from CSV: d input columns then one target column.

    Lines starting with '#' are comments; blank lines are skipped.  Raises
    :class:`CsvFormatError` with a 1-based line number on ragged rows or
    non-numeric fields, and on an empty file.
    """
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
                if width < 2:
                    raise CsvFormatError(
                        f"need at least 2 columns (inputs + target), line {lineno}"
                    )
            elif len(fields) != width:
                raise CsvFormatError(
                    f"ragged row: expected {width} fields, got {len(fields)}, "
                    f"line {lineno}"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise CsvFormatError(f"non-numeric field, line {lineno}") from None
    if not rows:
        raise CsvFormatError("empty file")
    data = np.asarray(rows, dtype=float)
    return Dataset(data[:, :-1], data[:, -1])


def save_csv(data: Dataset, path) -> None:
    """Write a dataset as CSV (17 significant digits, exact round trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(data.count):
            fields = [f"{v:.17g}" for v in data.inputs[i]]
            fields.append(f"{data.targets[i]:.17g}")
            fh.write(",".join(fields) + "\n")


def normalize(data: Dataset) -> tuple[Dataset, NormalizationStats]:
    """Map each input column and the target affinely onto [0, 1].

    Constant columns (zero range) map to 0.  The returned stats invert the
    maps exactly via :func:`denormalize`.
    """
    x_min = data.inputs.min(axis=0)
    x_range = data.inputs.max(axis=0) - x_min
    y_min = float(data.targets.min())
    y_range = float(data.targets.max()) - y_min
    stats = NormalizationStats(x_min, x_range, y_min, y_range)
    return Dataset(stats.normalize_inputs(data.inputs),
                   stats.normalize_targets(data.targets)), stats


def denormalize(data: Dataset, stats: NormalizationStats) -> Dataset:
    """Invert :func:`normalize`."""
    return Dataset(stats.denormalize_inputs(data.inputs),
                   stats.denormalize_mean(data.targets))


def normalized_error(pred: np.ndarray, truth: np.ndarray) -> float:
    """Euclidean error ratio ||truth - pred|| / ||truth||."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise ValueError("truth vector has zero norm")
    return float(np.linalg.norm(truth - pred) / denom)
