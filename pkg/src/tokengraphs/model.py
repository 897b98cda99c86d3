"""L2-regularized logistic regression trained by full-batch gradient descent.

Nothing here is stochastic beyond the seeded coefficient initialization, so
training is reproducible bit-for-bit from its config.  Features are
z-scored before descent; raw amounts reach 1e21 and make unscaled descent
numerically hopeless.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import VARIANTS, FeatureVector, feature_matrix

MODEL_FORMAT_VERSION = 1

_KNOWN_FEATURE_NAMES = frozenset(
    name for names in VARIANTS.values() for name in names
)


class TrainingError(RuntimeError):
    """Degenerate training input (single class, empty matrix, divergence)."""


class ModelFormatError(ValueError):
    pass


class FeatureMismatchError(ValueError):
    """Model feature names do not match what the caller can provide."""


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    """Overflow-safe logistic function."""
    arr = np.asarray(z, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if isinstance(z, np.ndarray) else float(out)


@dataclass
class Standardizer:
    """Per-feature z-scoring statistics, fitted on training rows only."""

    means: np.ndarray
    stds: np.ndarray  # population stds; zeros are kept and applied as 1

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        safe = np.where(self.stds == 0.0, 1.0, self.stds)
        return (matrix - self.means) / safe


def standardize_fit(matrix: np.ndarray) -> Standardizer:
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise ValueError("standardizer needs at least one row")
    return Standardizer(
        means=matrix.mean(axis=0),
        stds=matrix.std(axis=0),  # population (divide by n)
    )


@dataclass
class TrainConfig:
    lam: float = 1.0
    learning_rate: float = 0.1
    max_iters: int = 10_000
    tolerance: float = 1e-7
    seed: int = 0
    log_amount: bool = False  # model amount as log10(1 + x) instead of raw


@dataclass
class Prediction:
    probability: float
    label: int


@dataclass
class Model:
    feature_names: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    standardizer: Standardizer
    config: TrainConfig
    iterations: int = 0
    final_loss: float = float("nan")
    loss_history: list[float] | None = field(default=None, repr=False)
    train_row_ids: frozenset | None = field(default=None, repr=False)

    @property
    def variant(self) -> str | None:
        for name, names in VARIANTS.items():
            if names == self.feature_names:
                return name
        return None

    def decision_values(self, matrix: np.ndarray) -> np.ndarray:
        scaled = self.standardizer.transform(matrix)
        return self.intercept + scaled @ self.coefficients

    def predict_matrix(self, matrix: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_values(matrix))


def loss_and_gradient(
    params: np.ndarray,
    matrix: np.ndarray,
    labels: np.ndarray,
    lam: float,
) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood plus an L2 term on the non-intercept weights.

    ``params[0]`` is the intercept and is not penalized.  The penalty is
    ``lam/(2k) * sum(beta^2)`` over the k feature weights, which keeps the
    objective invariant under row replication.  The gradient is the exact
    derivative; log-sum-exp keeps both pieces finite for any z.
    """
    n_rows, n_feat = matrix.shape
    if params.shape != (n_feat + 1,) or labels.shape != (n_rows,):
        raise ValueError("parameter/label dimensions do not match the matrix")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    beta0 = params[0]
    beta = params[1:]
    z = beta0 + matrix @ beta
    # mean NLL: softplus(z) - y*z, via logaddexp(0, z) for stability
    nll = float(np.mean(np.logaddexp(0.0, z) - labels * z))
    loss = nll + lam / (2.0 * n_feat) * float(beta @ beta)

    residual = sigmoid(z) - labels
    grad = np.empty_like(params)
    grad[0] = residual.mean()
    grad[1:] = matrix.T @ residual / n_rows + lam / n_feat * beta
    return loss, grad


def train_matrix(
    matrix: np.ndarray,
    labels: Sequence[int],
    feature_names: tuple[str, ...],
    config: TrainConfig | None = None,
    row_ids: Sequence | None = None,
) -> Model:
    """Fit a standardizer and run gradient descent on a raw feature matrix."""
    config = config or TrainConfig()
    y = np.asarray(labels, dtype=np.float64)
    if y.size == 0 or len({int(v) for v in y}) < 2:
        raise TrainingError("training data must contain both classes")
    scaler = standardize_fit(matrix)
    scaled = scaler.transform(matrix)

    rng = np.random.default_rng(config.seed)
    params = rng.normal(0.0, 0.01, size=matrix.shape[1] + 1)

    history: list[float] = []
    iterations = 0
    loss, grad = loss_and_gradient(params, scaled, y, config.lam)
    history.append(loss)
    for iterations in range(1, config.max_iters + 1):
        if float(np.abs(grad).max()) < config.tolerance:
            iterations -= 1
            break
        params = params - config.learning_rate * grad
        loss, grad = loss_and_gradient(params, scaled, y, config.lam)
        if loss > history[-1] + 1e-12 * max(1.0, abs(history[-1])):
            raise TrainingError(
                f"loss increased at iteration {iterations}; lower the learning rate"
            )
        history.append(loss)

    return Model(
        feature_names=tuple(feature_names),
        intercept=float(params[0]),
        coefficients=params[1:].copy(),
        standardizer=scaler,
        config=config,
        iterations=iterations,
        final_loss=history[-1],
        loss_history=history,
        train_row_ids=frozenset(row_ids) if row_ids is not None else None,
    )


def train(dataset, config: TrainConfig | None = None, variant: str = "full") -> Model:
    """Train on a labeled dataset using one of the named feature variants."""
    config = config or TrainConfig()
    matrix, names = feature_matrix(dataset.vectors, variant,
                                   log_amount=config.log_amount)
    return train_matrix(matrix, dataset.labels, names, config,
                        row_ids=dataset.row_ids())


def _matrix_for_model(model: Model, vectors: Sequence[FeatureVector]) -> np.ndarray:
    unknown = [n for n in model.feature_names if n not in _KNOWN_FEATURE_NAMES]
    if unknown:
        raise FeatureMismatchError(f"model uses unknown features: {unknown}")
    matrix = np.empty((len(vectors), len(model.feature_names)), dtype=np.float64)
    for i, fv in enumerate(vectors):
        for j, name in enumerate(model.feature_names):
            matrix[i, j] = fv.value(name)
    if model.config.log_amount and "amount" in model.feature_names:
        column = model.feature_names.index("amount")
        matrix[:, column] = np.log10(1.0 + matrix[:, column])
    return matrix


def predict_proba(model: Model, vectors: Sequence[FeatureVector]) -> np.ndarray:
    """Scam probabilities for feature vectors, using the model's own scaling."""
    return model.predict_matrix(_matrix_for_model(model, vectors))


def classify(probability: float, threshold: float = 0.5) -> int:
    """Map a probability to a class label; the threshold itself maps to 1."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability out of range: {probability}")
    return 1 if probability >= threshold else 0


def predict(model: Model, vectors: Sequence[FeatureVector],
            threshold: float = 0.5) -> list[Prediction]:
    probs = predict_proba(model, vectors)
    return [Prediction(float(p), classify(float(p), threshold)) for p in probs]


# ---------------------------------------------------------------------------
# model file format: "key: value" lines, floats with 17 significant digits

def _f17(x: float) -> str:
    return format(float(x), ".17g")


def save_model(model: Model, path: str | os.PathLike) -> None:
    lines = [
        f"format_version: {MODEL_FORMAT_VERSION}",
        f"feature_names: {','.join(model.feature_names)}",
        f"intercept: {_f17(model.intercept)}",
        f"coefficients: {','.join(_f17(c) for c in model.coefficients)}",
        f"means: {','.join(_f17(m) for m in model.standardizer.means)}",
        f"stds: {','.join(_f17(s) for s in model.standardizer.stds)}",
        f"lambda: {_f17(model.config.lam)}",
        f"learning_rate: {_f17(model.config.learning_rate)}",
        f"max_iters: {model.config.max_iters}",
        f"tolerance: {_f17(model.config.tolerance)}",
        f"seed: {model.config.seed}",
        f"log_amount: {int(model.config.log_amount)}",
        f"iterations: {model.iterations}",
        f"final_loss: {_f17(model.final_loss)}",
    ]
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


_REQUIRED_KEYS = (
    "format_version", "feature_names", "intercept", "coefficients", "means",
    "stds", "lambda", "learning_rate", "max_iters", "tolerance", "seed",
    "log_amount", "iterations", "final_loss",
)


def load_model(path: str | os.PathLike) -> Model:
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if ": " not in line:
                raise ModelFormatError(f"malformed model line: {line!r}")
            key, value = line.split(": ", 1)
            entries[key] = value
    missing = [k for k in _REQUIRED_KEYS if k not in entries]
    if missing:
        raise ModelFormatError(f"model file truncated; missing {missing}")
    version = int(entries["format_version"])
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")

    names = tuple(entries["feature_names"].split(","))
    coefficients = np.array([float(v) for v in entries["coefficients"].split(",")])
    means = np.array([float(v) for v in entries["means"].split(",")])
    stds = np.array([float(v) for v in entries["stds"].split(",")])
    if not (len(names) == coefficients.size == means.size == stds.size):
        raise ModelFormatError("inconsistent feature/coefficient counts")
    config = TrainConfig(
        lam=float(entries["lambda"]),
        learning_rate=float(entries["learning_rate"]),
        max_iters=int(entries["max_iters"]),
        tolerance=float(entries["tolerance"]),
        seed=int(entries["seed"]),
        log_amount=bool(int(entries["log_amount"])),
    )
    return Model(
        feature_names=names,
        intercept=float(entries["intercept"]),
        coefficients=coefficients,
        standardizer=Standardizer(means=means, stds=stds),
        config=config,
        iterations=int(entries["iterations"]),
        final_loss=float(entries["final_loss"]),
    )
