"""
This module implements the Gaussian naive Bayes classifier, its
leave-one-out evaluation and the two dataset assemblies: target versus
non-target per direction, and three-class direction from concatenated
trial vectors.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import LeaveOneOut

from assrbci.dsp import FeatureVector
from assrbci.mypy_types import FloatArray
from assrbci.stimgen import Direction

logger = logging.getLogger(__name__)

TARGET = "target"
NON_TARGET = "non-target"
TVNT_CLASSES = (TARGET, NON_TARGET)
DIRECTION_CLASSES = tuple(d.value for d in Direction)
VARIANCE_FLOOR = 1e-9
PRIORS = ("empirical", "uniform")


@dataclass(frozen=True)
class Dataset:
    """
    Labelled samples.

    :param X: an ``n_samples x dimension`` matrix.

    :param y: one class label per sample.

    :param classes: the class labels in tie-break order. Every label in
      ``y`` must appear here.

    :param name: an optional description used in messages.
    """

    X: FloatArray
    y: Tuple[str, ...]
    classes: Tuple[str, ...]
    name: str = ""

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"Dataset matrix must be 2-D, got shape {X.shape}")
        if X.shape[1] == 0:
            raise ValueError("Dataset has zero-dimension samples")
        if X.shape[0] != len(self.y):
            raise ValueError(
                f"Dataset has {X.shape[0]} samples but {len(self.y)} labels"
            )
        if not np.all(np.isfinite(X)):
            raise ValueError("Dataset contains non-finite features")
        unknown = set(self.y) - set(self.classes)
        if unknown:
            raise ValueError(f"Labels not among classes: {sorted(unknown)}")
        if len(set(self.y)) < 2:
            raise ValueError("Dataset needs samples from at least 2 classes")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", tuple(self.y))
        object.__setattr__(self, "classes", tuple(self.classes))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def counts(self) -> Dict[str, int]:
        return {c: self.y.count(c) for c in self.classes}

    def scaled(self, factor: float) -> "Dataset":
        return Dataset(self.X * factor, self.y, self.classes, self.name)


@dataclass(frozen=True)
class NbcOptions:
    """
    :param var_floor: lower bound applied to every fitted variance.

    :param priors: ``"empirical"`` uses class frequencies, ``"uniform"``
      gives every class the same prior.
    """

    var_floor: float = VARIANCE_FLOOR
    priors: str = "empirical"

    def __post_init__(self) -> None:
        if not self.var_floor > 0:
            raise ValueError(f"var_floor must be positive, got {self.var_floor}")
        if self.priors not in PRIORS:
            raise ValueError(f"priors must be one of {PRIORS}, got {self.priors!r}")


@dataclass(frozen=True)
class NbcModel:
    classes: Tuple[str, ...]
    log_priors: FloatArray
    means: FloatArray
    variances: FloatArray

    @property
    def priors(self) -> FloatArray:
        return np.exp(self.log_priors)

    @property
    def dimension(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class CvResult:
    """Outcome of a leave-one-out run. ``predictions[k]`` is the label
    predicted for sample ``k`` by the model trained without it."""

    classes: Tuple[str, ...]
    truth: Tuple[str, ...]
    predictions: Tuple[str, ...]
    confusion: Tuple[Tuple[int, ...], ...]

    @property
    def n_folds(self) -> int:
        return len(self.predictions)

    @property
    def n_correct(self) -> int:
        return sum(self.confusion[i][i] for i in range(len(self.classes)))

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_folds

    def as_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "classes": list(self.classes),
            "confusion": [list(row) for row in self.confusion],
            "truth": list(self.truth),
            "predictions": list(self.predictions),
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "CvResult":
        """
        :raises: ValueError if a field is missing, there are no predictions
          or the confusion matrix does not fit the classes.
        """
        try:
            result = cls(
                classes=tuple(doc["classes"]),
                truth=tuple(doc["truth"]),
                predictions=tuple(doc["predictions"]),
                confusion=tuple(tuple(int(v) for v in row) for row in doc["confusion"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"Malformed CvResult: {exc}") from None
        if not result.predictions:
            raise ValueError("Malformed CvResult: no predictions")
        if len(result.truth) != len(result.predictions):
            raise ValueError(
                f"Malformed CvResult: {len(result.truth)} labels for "
                f"{len(result.predictions)} predictions"
            )
        n = len(result.classes)
        if len(result.confusion) != n or any(len(r) != n for r in result.confusion):
            raise ValueError(f"Malformed CvResult: confusion is not {n} x {n}")
        return result


def _check_class_sizes(data: Dataset, minimum: int = 2) -> None:
    for c, n in data.counts().items():
        if 0 < n < minimum:
            raise ValueError(
                f"Class '{c}' has {n} sample(s); at least {minimum} are required"
                + (f" in {data.name}" if data.name else "")
            )


def fit_nbc(train: Dataset, options: Optional[NbcOptions] = None) -> NbcModel:
    """Fit per-class Gaussian densities for every feature.

    Means are sample means, variances unbiased sample variances raised to
    ``options.var_floor``. Classes without samples are left out of the
    model.

    :raises: ValueError if a present class has fewer than 2 samples.
    """
    options = options or NbcOptions()
    return _fit(train, options, minimum=2)


def _fit(train: Dataset, options: NbcOptions, minimum: int) -> NbcModel:
    _check_class_sizes(train, minimum)
    y = np.asarray(train.y)
    classes = tuple(c for c in train.classes if np.any(y == c))

    means = np.empty((len(classes), train.dimension))
    variances = np.empty((len(classes), train.dimension))
    counts = np.empty(len(classes))
    for i, c in enumerate(classes):
        rows = train.X[y == c]
        counts[i] = rows.shape[0]
        means[i] = rows.mean(axis=0)
        if rows.shape[0] > 1:
            variances[i] = np.maximum(rows.var(axis=0, ddof=1), options.var_floor)
        else:
            variances[i] = options.var_floor

    if options.priors == "uniform":
        log_priors = np.full(len(classes), -np.log(len(classes)))
    else:
        log_priors = np.log(counts / counts.sum())
    return NbcModel(classes, log_priors, means, variances)


def log_posteriors(model: NbcModel, x: np.ndarray) -> FloatArray:
    """Unnormalized log posterior of each class: log prior plus the sum of
    per-feature Gaussian log densities"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != model.dimension:
        raise ValueError(
            f"Sample dimension {x.size} does not match model dimension "
            f"{model.dimension}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("Sample contains non-finite features")
    log_density = -0.5 * (
        np.log(2 * np.pi * model.variances) + (x - model.means) ** 2 / model.variances
    )
    return model.log_priors + log_density.sum(axis=1)


def predict_nbc(model: NbcModel, x: np.ndarray) -> Tuple[str, Dict[str, float]]:
    """Most probable class of ``x`` with every class's log posterior.

    Ties go to the class listed first in ``model.classes``.
    """
    scores = log_posteriors(model, x)
    best = int(np.argmax(scores))
    return model.classes[best], dict(zip(model.classes, scores.tolist()))


def loo_cv(data: Dataset, options: Optional[NbcOptions] = None) -> CvResult:
    """Leave-one-out cross-validation: fold ``k`` trains on every sample but
    ``k`` and predicts ``k``.

    :raises: ValueError naming any class with fewer than 2 samples, since
      some fold would then train without it.
    """
    options = options or NbcOptions()
    _check_class_sizes(data)
    predictions = []
    for train_index, test_index in LeaveOneOut().split(data.X):
        train = Dataset(
            data.X[train_index],
            tuple(data.y[i] for i in train_index),
            data.classes,
            data.name,
        )
        # A class of 2 leaves a single training sample in one fold.
        model = _fit(train, options, minimum=1)
        label, _ = predict_nbc(model, data.X[test_index[0]])
        predictions.append(label)

    confusion = confusion_matrix(list(data.y), predictions, labels=list(data.classes))
    result = CvResult(
        classes=data.classes,
        truth=data.y,
        predictions=tuple(predictions),
        confusion=tuple(tuple(int(v) for v in row) for row in confusion),
    )
    logger.debug(
        f"loo {data.name or 'dataset'}: {result.n_correct}/{result.n_folds} correct"
    )
    return result


def _check_single_condition(features: Sequence[FeatureVector]) -> None:
    if not features:
        raise ValueError("No feature vectors to assemble")
    conditions = {v.condition for v in features}
    if len(conditions) != 1:
        names = sorted(f"{k.value} {length:g} s" for k, length in conditions)
        raise ValueError(f"Feature vectors mix conditions: {', '.join(names)}")


def assemble_tvnt(features: Sequence[FeatureVector]) -> Dict[Direction, Dataset]:
    """One target versus non-target dataset per direction.

    :raises: ValueError if the input is empty, mixes conditions, or holds
      unequal numbers of vectors per direction.
    """
    _check_single_condition(features)
    groups = defaultdict(list)  # type: Dict[Direction, List[FeatureVector]]
    for v in features:
        groups[v.direction].append(v)
    counts = {d.value: len(groups[d]) for d in Direction}
    if len(set(counts.values())) != 1:
        raise ValueError(f"Unequal feature vector counts per direction: {counts}")

    datasets = {}
    for direction in Direction:
        vectors = sorted(groups[direction], key=lambda v: v.trial)
        datasets[direction] = Dataset(
            X=np.vstack([v.values for v in vectors]),
            y=tuple(TARGET if v.attended else NON_TARGET for v in vectors),
            classes=TVNT_CLASSES,
            name=f"{direction.value} target vs non-target",
        )
    return datasets


def assemble_direction(features: Sequence[FeatureVector]) -> Dataset:
    """One sample per trial: the trial's vectors concatenated left, center,
    right, labelled with the attended direction.

    :raises: ValueError if a trial does not hold exactly one vector per
      direction with exactly one attended.
    """
    _check_single_condition(features)
    trials = defaultdict(list)  # type: Dict[int, List[FeatureVector]]
    for v in features:
        trials[v.trial].append(v)

    rows = []
    labels = []
    for trial in sorted(trials):
        vectors = trials[trial]
        if len(vectors) != len(Direction):
            raise ValueError(
                f"Trial {trial} has {len(vectors)} stimuli; expected {len(Direction)}"
            )
        by_direction = {v.direction: v for v in vectors}
        if len(by_direction) != len(Direction):
            raise ValueError(f"Trial {trial} repeats a direction")
        attended = [v.direction for v in vectors if v.attended]
        if len(attended) != 1:
            raise ValueError(
                f"Trial {trial} has {len(attended)} attended stimuli; expected 1"
            )
        rows.append(np.concatenate([by_direction[d].values for d in Direction]))
        labels.append(attended[0].value)

    return Dataset(
        X=np.vstack(rows),
        y=tuple(labels),
        classes=DIRECTION_CLASSES,
        name="direction",
    )
