"""
This module extracts feature vectors in bulk, stores them as CSV and
summarizes their PLV distributions.
"""

import csv
import io
import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import quantile

from assrbci.dsp import (
    DspConfig,
    FeatureVector,
    channel_pairs,
    feature_vector,
    n_channels_for,
    preprocess_raw,
)
from assrbci.epochs import Epoch
from assrbci.labeldict import LabelDict
from assrbci.mypy_types import LabelsType
from assrbci.stimgen import Direction, StimulusKind

logger = logging.getLogger(__name__)

LABEL_COLUMNS = ("f_m", "direction", "attended", "kind", "length", "trial")


def extract_features(
    epochs: Iterable[Epoch], config: Optional[DspConfig] = None
) -> List[FeatureVector]:
    """Feature vector of every epoch, each at its own modulation frequency.

    Epochs are passed through :func:`assrbci.dsp.preprocess_raw` first when
    ``config.preprocess`` is set.
    """
    config = config or DspConfig()
    vectors = []
    for epoch in epochs:
        if config.preprocess:
            epoch = preprocess_raw(epoch)
        vectors.append(feature_vector(epoch, epoch.f_m, config))
    logger.debug(f"extracted {len(vectors)} feature vectors")
    return vectors


def pair_column(a: int, b: int) -> str:
    return f"pair_{a:02d}_{b:02d}"


def csv_header(n_channels: int) -> List[str]:
    return [pair_column(a, b) for a, b in channel_pairs(n_channels)] + list(
        LABEL_COLUMNS
    )


def _format_float(value: float) -> str:
    return repr(float(value))


def dumps_features(vectors: Sequence[FeatureVector]) -> str:
    """Serialize feature vectors to CSV text.

    Floats use their shortest round-trip representation so the same
    vectors always give the same text.

    :raises: ValueError if the vectors differ in dimension or the set is
      empty.
    """
    if not vectors:
        raise ValueError("No feature vectors to write")
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise ValueError(f"Feature vectors differ in dimension: {sorted(dims)}")
    n_channels = n_channels_for(len(vectors[0]))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(n_channels))
    for v in vectors:
        writer.writerow(
            [_format_float(x) for x in v.values]
            + [
                _format_float(v.f_m),
                v.direction.value,
                int(bool(v.attended)),
                v.kind.value,
                _format_float(v.length),
                v.trial,
            ]
        )
    return buf.getvalue()


def write_features_csv(vectors: Sequence[FeatureVector], path) -> None:
    text = dumps_features(vectors)
    with open(path, "wt", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"wrote {len(vectors)} feature vectors to {path}")


def _parse_row(row: List[str], header: List[str], n_features: int) -> FeatureVector:
    if len(row) != len(header):
        raise ValueError(f"expected {len(header)} fields, got {len(row)}")
    labels = dict(zip(LABEL_COLUMNS, row[n_features:]))
    values = np.array([float(x) for x in row[:n_features]])
    if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
        raise ValueError("PLV values must lie within [0, 1]")
    if labels["attended"] not in ("0", "1"):
        raise ValueError(f"attended must be 0 or 1, got {labels['attended']!r}")
    return FeatureVector(
        values=values,
        f_m=float(labels["f_m"]),
        direction=Direction(labels["direction"]),
        attended=labels["attended"] == "1",
        kind=StimulusKind(labels["kind"]),
        length=float(labels["length"]),
        trial=int(labels["trial"]),
    )


def loads_features(text: str) -> List[FeatureVector]:
    """Parse CSV text written by :func:`dumps_features`.

    :raises: ValueError naming the first bad row.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("Feature CSV is empty") from None
    n_features = len(header) - len(LABEL_COLUMNS)
    if n_features < 1 or tuple(header[n_features:]) != LABEL_COLUMNS:
        raise ValueError(f"Feature CSV header must end with {','.join(LABEL_COLUMNS)}")
    try:
        n_channels = n_channels_for(n_features)
    except ValueError as exc:
        raise ValueError(f"Feature CSV header: {exc}") from None
    if header != csv_header(n_channels):
        raise ValueError("Feature CSV pair columns are out of order")

    vectors = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            vectors.append(_parse_row(row, header, n_features))
        except ValueError as exc:
            raise ValueError(f"Feature CSV row {line_no}: {exc}") from None
    return vectors


def read_features_csv(path) -> List[FeatureVector]:
    """
    :raises: ValueError if the file is missing or malformed.
    """
    try:
        with open(path, "rt", encoding="utf-8", newline="") as f:
            text = f.read()
    except FileNotFoundError:
        raise ValueError(f"Feature CSV not found: {path}") from None
    return loads_features(text)


@dataclass
class _PlvGroup:
    estimator: quantile.Estimator
    count: int = 0
    total: float = 0.0


class PlvSummary:
    """
    A streaming summary of per-epoch mean PLV values.

    Observations are grouped by labels, e.g. ``{"direction": "left",
    "attended": True}``. Each group keeps a count, a sum and quantile
    estimates, so very large feature sets can be summarized without being
    held in memory.
    """

    DEFAULT_INVARIANTS = ((0.50, 0.05), (0.90, 0.01), (0.99, 0.001))
    SUM_KEY = "sum"
    COUNT_KEY = "count"

    def __init__(
        self, invariants: Sequence[Tuple[float, float]] = DEFAULT_INVARIANTS
    ) -> None:
        self.invariants = tuple(invariants)
        self.groups = LabelDict()

    def observe(self, labels: LabelsType, value: float) -> None:
        """Add a single observation"""
        if type(value) not in (float, int):  # pylint: disable=unidiomatic-typecheck
            raise TypeError("PlvSummary only works with digits (int, float)")
        try:
            group = self.groups[labels]
        except KeyError:
            group = _PlvGroup(quantile.Estimator(*self.invariants))
            self.groups[labels] = group
        group.estimator.observe(float(value))
        group.count += 1
        group.total += value

    def observe_vectors(self, vectors: Iterable[FeatureVector]) -> None:
        """Observe the mean PLV of each vector, grouped by direction and
        attended flag"""
        for v in vectors:
            labels = {"direction": v.direction.value, "attended": bool(v.attended)}
            self.observe(labels, float(np.mean(v.values)))

    def get(self, labels: LabelsType) -> Dict[Union[float, str], float]:
        """
        Get a dict of the quantiles, count and sum of one label group.

        :raises: KeyError if no observation carries these labels.
        """
        group = self.groups[labels]  # type: _PlvGroup
        data = OrderedDict(
            (q, group.estimator.query(q)) for q, _ in self.invariants
        )  # type: Dict[Union[float, str], float]
        data[self.COUNT_KEY] = group.count
        data[self.SUM_KEY] = group.total
        return data

    def get_all(self) -> Iterator[Tuple[LabelsType, Dict[Union[float, str], float]]]:
        """Every label group with its summary, in label order"""
        for labels, _ in sorted(
            self.groups.labelled_items(), key=lambda item: sorted(item[0].items())
        ):
            yield labels, self.get(labels)
