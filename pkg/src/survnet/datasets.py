"""Simulation schemes, file ingestion, splitting and standardization.

All random draws go through ``numpy.random.default_rng`` (PCG64) seeded
with the caller's integer seed, so a (scheme, n, p, p_prime, seed) tuple
always produces the same bytes.
"""

from __future__ import annotations

import csv
import gzip
import struct
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError, IdxFormatError, ParseError

TRAIN, VALIDATION, TEST = 0, 1, 2
SPLIT_NAMES = {TRAIN: "train", VALIDATION: "validation", TEST: "test"}

TEST_FRACTION = 0.2
VALIDATION_FRACTION = 0.3

SCHEMES = ("indep_mean_shift", "correlated_mean_shift", "variance_inflation",
           "nonlinear_regression")

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class SimSpec:
    scheme: str = "indep_mean_shift"
    n: int = 10000
    p: int = 784
    p_prime: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.n < 2 or self.p < 1 or not 0 <= self.p_prime <= self.p:
            raise ConfigError(f"bad sizes n={self.n} p={self.p} p_prime={self.p_prime}")
        if self.scheme == "nonlinear_regression" and self.p_prime not in (0, 64):
            raise ConfigError("nonlinear_regression is defined for p_prime = 64 only")


@dataclass
class LabeledDataset:
    """Samples x variables with targets.

    ``y`` holds integer class labels for classification and floats for
    regression. ``split`` tags each row TRAIN / VALIDATION / TEST and may
    be None until :func:`split` is called. ``truth`` is the sorted array of
    significant variable ids for simulated data.
    """

    X: np.ndarray
    y: np.ndarray
    task: str = "classification"
    truth: np.ndarray | None = None
    split: np.ndarray | None = None
    grid: tuple[int, int] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-D, got {self.X.shape}")
        if len(self.y) != self.X.shape[0]:
            raise DataError(f"{len(self.y)} targets for {self.X.shape[0]} rows")
        if self.task not in ("classification", "regression"):
            raise ConfigError(f"unknown task {self.task!r}")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return int(self.y.max()) + 1 if self.task == "classification" else 0

    @property
    def n_outputs(self):
        return self.n_classes if self.task == "classification" else 1

    def targets(self, rows=None):
        """Network targets: one-hot rows or a single real column."""
        y = self.y if rows is None else self.y[rows]
        if self.task == "classification":
            Y = np.zeros((len(y), self.n_classes))
            Y[np.arange(len(y)), y.astype(np.int64)] = 1.0
            return Y
        return np.asarray(y, dtype=np.float64).reshape(-1, 1)

    def rows(self, which):
        if self.split is None:
            raise ConfigError("dataset has not been split")
        return np.flatnonzero(self.split == which)

    def part(self, which, columns=None):
        """(X, Y) for one split, optionally restricted to ``columns``."""
        idx = self.rows(which)
        X = self.X[idx] if columns is None else self.X[np.ix_(idx, columns)]
        return X, self.targets(idx)


def _two_classes(rng, n):
    y = np.zeros(n, dtype=np.int64)
    y[rng.permutation(n)[: n // 2]] = 1
    return y


def _shift_means(X, y, rng, p_prime):
    """Shift ``p_prime`` random columns in class 1 by +/- U(0.1, 0.3)."""
    p = X.shape[1]
    truth = np.sort(rng.choice(p, size=p_prime, replace=False))
    delta = rng.uniform(0.1, 0.3, size=p_prime)
    sign = 2 * rng.integers(0, 2, size=p_prime) - 1
    c1 = y == 1
    X[np.ix_(c1, truth)] += sign * delta
    return truth, sign * delta


def gen_dataset1(spec):
    """Independent U(0,1) variables, class-1 mean shift on ``p_prime`` of them."""
    rng = np.random.default_rng(spec.seed)
    X = rng.uniform(0.0, 1.0, size=(spec.n, spec.p))
    y = _two_classes(rng, spec.n)
    truth, shifts = _shift_means(X, y, rng, spec.p_prime)
    return LabeledDataset(X, y, truth=truth,
                          meta={"spec": vars(spec).copy(), "shifts": shifts.tolist()})


def gen_dataset2(images, spec, grid=(28, 28)):
    """Mean-shift scheme applied to real (correlated) images.

    ``images`` are the pre-filtered pictures of one digit as an
    (n_images, n_pixels) array in [0, 1]; ``spec.n`` of them are drawn
    without replacement and split into two pseudo-classes at random.
    """
    images = np.asarray(images, dtype=np.float64).reshape(len(images), -1)
    if images.shape[1] != spec.p:
        raise ConfigError(f"images have {images.shape[1]} pixels, spec.p={spec.p}")
    if len(images) < spec.n:
        raise ConfigError(f"need {spec.n} images, only {len(images)} available")
    rng = np.random.default_rng(spec.seed)
    X = images[np.sort(rng.choice(len(images), size=spec.n, replace=False))].copy()
    y = _two_classes(rng, spec.n)
    truth, shifts = _shift_means(X, y, rng, spec.p_prime)
    return LabeledDataset(X, y, truth=truth, grid=grid,
                          meta={"spec": vars(spec).copy(), "shifts": shifts.tolist()})


def gen_dataset3(spec):
    """Variance inflation: class-1 entries of significant columns get an
    independent +/- U(0.8, 1) kick, leaving the mean unchanged."""
    rng = np.random.default_rng(spec.seed)
    X = rng.uniform(0.0, 1.0, size=(spec.n, spec.p))
    y = _two_classes(rng, spec.n)
    truth = np.sort(rng.choice(spec.p, size=spec.p_prime, replace=False))
    c1 = np.flatnonzero(y == 1)
    shape = (len(c1), spec.p_prime)
    kick = (2 * rng.integers(0, 2, size=shape) - 1) * rng.uniform(0.8, 1.0, size=shape)
    X[np.ix_(c1, truth)] += kick
    return LabeledDataset(X, y, truth=truth, meta={"spec": vars(spec).copy()})


def _signed_uniform(rng, size):
    return (2 * rng.integers(0, 2, size=size) - 1) * rng.uniform(1.0, 3.0, size=size)


def dataset4_response(Z, beta, beta_pair, noise):
    """Regression function on the 64 significant columns ``Z`` (in order)."""
    y = (Z[:, :16] @ beta[:16]
         + np.sin(Z[:, 16:32]) @ beta[16:32]
         + np.exp(Z[:, 32:48]) @ beta[32:48]
         + np.maximum(0.0, Z[:, 48:64]) @ beta[48:64])
    for k, (a, b) in enumerate(((14, 15), (30, 31), (46, 47), (62, 63))):
        y = y + beta_pair[k] * Z[:, a] * Z[:, b]
    return y + noise


def gen_dataset4(spec, beta=None, beta_pair=None):
    """Nonlinear regression on 64 of ``p`` U(-1, 1) variables.

    Coefficients are drawn as +/- U(1, 3) unless given explicitly.
    """
    rng = np.random.default_rng(spec.seed)
    X = rng.uniform(-1.0, 1.0, size=(spec.n, spec.p))
    truth_order = rng.choice(spec.p, size=64, replace=False)
    drawn, drawn_pair = _signed_uniform(rng, 64), _signed_uniform(rng, 4)
    beta = drawn if beta is None else np.asarray(beta, dtype=np.float64)
    beta_pair = drawn_pair if beta_pair is None else np.asarray(beta_pair, dtype=np.float64)
    noise = rng.standard_normal(spec.n)
    y = dataset4_response(X[:, truth_order], beta, beta_pair, noise)
    truth = np.sort(truth_order) if spec.p_prime else np.array([], dtype=np.int64)
    return LabeledDataset(X, y, task="regression", truth=truth,
                          meta={"spec": vars(spec).copy(), "beta": beta.tolist(),
                                "beta_pair": beta_pair.tolist(),
                                "truth_order": truth_order.tolist()})


def correlated_images(n, grid=(28, 28), neighbor_corr=0.5, seed=0):
    """Synthetic stand-in for MNIST digits: a stationary Gaussian field with
    squared-exponential covariance ``neighbor_corr ** d**2`` on the pixel grid.

    Not real image data; used only when the MNIST files are unavailable.
    """
    h, w = grid
    rr, cc = np.divmod(np.arange(h * w), w)
    d2 = (rr[:, None] - rr[None, :]) ** 2 + (cc[:, None] - cc[None, :]) ** 2
    cov = neighbor_corr ** d2.astype(np.float64)
    L = np.linalg.cholesky(cov + 1e-8 * np.eye(h * w))
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, h * w)) @ L.T


def simulate(spec, images=None):
    if spec.scheme == "indep_mean_shift":
        return gen_dataset1(spec)
    if spec.scheme == "correlated_mean_shift":
        if images is None:
            images = correlated_images(spec.n, seed=spec.seed + 1)
        return gen_dataset2(images, spec)
    if spec.scheme == "variance_inflation":
        return gen_dataset3(spec)
    return gen_dataset4(spec)


# ---------------------------------------------------------------- IDX files

def _open(path):
    path = str(path)
    return gzip.open(path, "rb") if path.endswith(".gz") else open(path, "rb")


def read_idx(path, expected_magic=None):
    """Parse an unsigned-byte IDX file into an array shaped by its header."""
    with _open(path) as f:
        raw = f.read()
    if len(raw) < 4:
        raise IdxFormatError("file shorter than the magic number", len(raw))
    magic, = struct.unpack(">I", raw[:4])
    if expected_magic is not None and magic != expected_magic:
        raise IdxFormatError(f"bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}", 0)
    if magic >> 8 != 0x08:
        raise IdxFormatError(f"unsupported IDX type in magic 0x{magic:08x}", 0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError("truncated dimension header", len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) < header + size:
        raise IdxFormatError(f"truncated payload: expected {size} bytes", len(raw))
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path):
    """MNIST-style image/label pair; pixels scaled to [0, 1]."""
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC)
    if len(images) != len(labels):
        raise DataError(f"{len(images)} images but {len(labels)} labels")
    X = images.reshape(len(images), -1).astype(np.float64) / 255.0
    grid = tuple(images.shape[1:3]) if images.ndim == 3 else None
    return LabeledDataset(X, labels.astype(np.int64), grid=grid)


def mnist_pair(train, test, digits=(4, 9), n_validation=5000):
    """Two-digit task on MNIST keeping its official partition: the last
    ``n_validation`` training images are the validation split."""
    split = np.concatenate([np.full(train.n, TRAIN), np.full(test.n, TEST)])
    split[train.n - n_validation:train.n] = VALIDATION
    X = np.vstack([train.X, test.X])
    labels = np.concatenate([train.y, test.y])
    keep = np.isin(labels, digits)
    y = (labels[keep] == digits[1]).astype(np.int64)
    return LabeledDataset(X[keep], y, split=split[keep], grid=train.grid,
                          meta={"digits": list(digits)})


# ---------------------------------------------------------------- CSV

def load_csv(path, target, has_header=True):
    """Read a numeric CSV; ``target`` is a column name or integer index.

    Classification is assumed when every target value is a non-negative
    integer; the labels are then re-coded to 0..K-1.
    """
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows.pop(0) if has_header else None
    if isinstance(target, str) and not target.lstrip("-").isdigit():
        if header is None or target not in header:
            raise ConfigError(f"target column {target!r} not found")
        tcol = header.index(target)
    else:
        tcol = int(target)
        width = len(header) if header else len(rows[0]) if rows else 0
        if not -width <= tcol < width:
            raise ConfigError(f"target column {tcol} out of range")
        tcol %= width
    first = 2 if has_header else 1
    values = np.empty((len(rows), len(rows[0]) if rows else 0))
    for i, row in enumerate(rows):
        if len(row) != values.shape[1]:
            raise ParseError(f"expected {values.shape[1]} fields, got {len(row)}", i + first, len(row))
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", i + first, j + 1) from None
    y = values[:, tcol]
    X = np.delete(values, tcol, axis=1)
    names = [c for k, c in enumerate(header) if k != tcol] if header else None
    if np.all(y == np.round(y)) and y.min() >= 0:
        _, y = np.unique(y.astype(np.int64), return_inverse=True)
        return LabeledDataset(X, y.astype(np.int64), meta={"columns": names})
    return LabeledDataset(X, y, task="regression", meta={"columns": names})


def write_csv(dataset, path):
    """Write features and target as ``x0..x{p-1},y`` with round-trip floats."""
    head = ",".join([f"x{j}" for j in range(dataset.p)] + ["y"])
    y = dataset.y.reshape(-1, 1).astype(np.float64)
    fmt = ["%.17g"] * dataset.p + (["%d"] if dataset.task == "classification" else ["%.17g"])
    np.savetxt(path, np.hstack([dataset.X, y]), delimiter=",", fmt=fmt,
               header=head, comments="")


# ---------------------------------------------------------------- preprocessing

def split(dataset, seed=0):
    """Seeded 80/20 train/test split, then 30% of train held out for validation."""
    n = dataset.n
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_test = int(round(TEST_FRACTION * n))
    n_val = int(round(VALIDATION_FRACTION * (n - n_test)))
    labels = np.full(n, TRAIN, dtype=np.int64)
    labels[order[:n_test]] = TEST
    labels[order[n_test:n_test + n_val]] = VALIDATION
    return replace(dataset, split=labels)


def standardize(dataset):
    """Centre and scale every column with training-split statistics.

    Columns that are constant on the training split become all zeros.
    """
    train = dataset.X[dataset.rows(TRAIN)]
    mean = train.mean(axis=0)
    sd = train.std(axis=0, ddof=1) if len(train) > 1 else np.zeros(dataset.p)
    constant = ~(sd > 0)
    if constant.any():
        warnings.warn(f"{int(constant.sum())} constant column(s) set to zero", stacklevel=2)
    X = (dataset.X - mean) / np.where(constant, 1.0, sd)
    X[:, constant] = 0.0
    meta = dict(dataset.meta, standardized=True)
    return replace(dataset, X=X, meta=meta)
