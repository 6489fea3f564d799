"""
This module runs conditions end to end (simulate, extract, evaluate),
stores their results and builds the accuracy report.

The report has two views per task: accuracy by stimulus kind and length,
and accuracy by seed for the longest stimulus length. Seeds stand in for
subjects, so rows of the second view are labelled ``seed #k``. The
published accuracies of the listening study are embedded as reference
tables for side by side display; they are fixtures, not recomputed.
"""

import asyncio
import functools
import glob
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import orjson

from assrbci.classify import (
    CvResult,
    NbcOptions,
    assemble_direction,
    assemble_tvnt,
    loo_cv,
)
from assrbci.dsp import DspConfig, FeatureVector
from assrbci.eegsim import SimConfig, simulate_condition
from assrbci.epochs import EpochSet
from assrbci.features import extract_features
from assrbci.labeldict import LabelDict
from assrbci.mypy_types import CellValueType, TableRowsType
from assrbci.protocol import ProtocolConfig
from assrbci.stimgen import StimulusKind

logger = logging.getLogger(__name__)

TVNT = "tvnt"
DIRECTION = "direction"
TASKS = (TVNT, DIRECTION)
TASK_TITLES = {TVNT: "Target vs non-target", DIRECTION: "Direction"}
AVERAGE_STIMULI = "Average of all stimuli"
AVERAGE_ALL = "Average of all"
BEST_PER_SEED = "Average of best stimulus per seed"
BEST_PER_SUBJECT = "Average of best stimulus per subject"


@dataclass(frozen=True)
class ConditionResult:
    """Cross-validated accuracy of one task on one condition and seed.

    ``results`` holds one CvResult per dataset: ``left``, ``center`` and
    ``right`` for the target task, ``all`` for the direction task. The
    target task accuracy pools the three datasets.
    """

    task: str
    kind: StimulusKind
    length: float
    seed: int
    results: Dict[str, CvResult]

    @property
    def accuracy(self) -> float:
        folds = sum(r.n_folds for r in self.results.values())
        return sum(r.n_correct for r in self.results.values()) / folds

    @property
    def filename(self) -> str:
        return f"{self.task}_{self.kind.value}_{self.length:g}s_seed{self.seed}.json"

    def labels(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "kind": self.kind.value,
            "length": float(self.length),
            "seed": int(self.seed),
        }

    def as_dict(self) -> Dict[str, Any]:
        doc = self.labels()
        doc["accuracy"] = self.accuracy
        doc["results"] = {k: v.as_dict() for k, v in self.results.items()}
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ConditionResult":
        try:
            task = doc["task"]
            if task not in TASKS:
                raise ValueError(f"unknown task {task!r}")
            result = cls(
                task=task,
                kind=StimulusKind(doc["kind"]),
                length=float(doc["length"]),
                seed=int(doc["seed"]),
                results={k: CvResult.from_dict(v) for k, v in doc["results"].items()},
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"Malformed result document: missing {exc}") from None
        if not result.results:
            raise ValueError("Malformed result document: no results")
        return result


def run_condition(
    kind: StimulusKind,
    length: float,
    protocol: ProtocolConfig,
    simcfg: SimConfig,
    seed: int,
) -> EpochSet:
    """Simulate the 90 labelled epochs of one condition.

    :raises: ValueError if the condition is not part of the protocol.
    """
    if kind not in protocol.stimulus_kinds:
        raise ValueError(f"Stimulus kind {kind.value} is not in the protocol")
    if float(length) not in [float(v) for v in protocol.stimulus_lengths]:
        raise ValueError(f"Stimulus length {length:g} s is not in the protocol")
    eset = simulate_condition(protocol, simcfg, kind, length, seed)
    logger.info(f"simulated {kind.value} {length:g} s, seed {seed}: {len(eset)} epochs")
    return eset


def evaluate_features(
    features: Sequence[FeatureVector],
    task: str,
    seed: int = 0,
    options: Optional[NbcOptions] = None,
) -> ConditionResult:
    """Leave-one-out evaluation of one task on the features of a condition.

    :raises: ValueError for unknown tasks or badly shaped feature sets.
    """
    if task == TVNT:
        datasets = assemble_tvnt(features)
        results = {d.value: loo_cv(ds, options) for d, ds in datasets.items()}
    elif task == DIRECTION:
        results = {"all": loo_cv(assemble_direction(features), options)}
    else:
        raise ValueError(f"Unknown task {task!r}; expected one of {TASKS}")
    first = features[0]
    result = ConditionResult(task, first.kind, first.length, int(seed), results)
    logger.info(
        f"{task} {first.kind.value} {first.length:g} s, seed {seed}: "
        f"accuracy {result.accuracy:.4f}"
    )
    return result


def evaluate_condition(
    kind: StimulusKind,
    length: float,
    protocol: ProtocolConfig,
    simcfg: SimConfig,
    seed: int,
    dspcfg: Optional[DspConfig] = None,
    options: Optional[NbcOptions] = None,
    tasks: Sequence[str] = TASKS,
) -> List[ConditionResult]:
    """Simulate, extract and evaluate one condition"""
    eset = run_condition(kind, length, protocol, simcfg, seed)
    features = extract_features(eset.epochs, dspcfg)
    return [evaluate_features(features, task, seed, options) for task in tasks]


def _result_order(result: ConditionResult) -> Tuple[int, int, float, int]:
    kinds = list(StimulusKind)
    return (
        TASKS.index(result.task),
        kinds.index(result.kind),
        result.length,
        result.seed,
    )


async def run_sweep(
    protocol: ProtocolConfig,
    simcfg: SimConfig,
    seeds: Sequence[int],
    dspcfg: Optional[DspConfig] = None,
    options: Optional[NbcOptions] = None,
    tasks: Sequence[str] = TASKS,
    executor=None,
) -> List[ConditionResult]:
    """Evaluate every protocol condition for every seed.

    Conditions run concurrently in ``executor`` (the loop's default
    executor when None). The results are sorted by task, kind, length and
    seed, so the output does not depend on completion order.
    """
    loop = asyncio.get_running_loop()
    jobs = [
        loop.run_in_executor(
            executor,
            functools.partial(
                evaluate_condition,
                kind,
                length,
                protocol,
                simcfg,
                seed,
                dspcfg,
                options,
                tuple(tasks),
            ),
        )
        for seed in seeds
        for kind, length in protocol.conditions
    ]
    logger.debug(f"sweep started: {len(jobs)} condition runs")
    chunks = await asyncio.gather(*jobs)
    results = [r for chunk in chunks for r in chunk]
    return sorted(results, key=_result_order)


def save_result(result: ConditionResult, directory) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, result.filename)
    with open(path, "wb") as f:
        f.write(orjson.dumps(result.as_dict(), option=orjson.OPT_INDENT_2))
    return path


def load_results(directory) -> List[ConditionResult]:
    """Read every result document in a directory.

    :raises: ValueError if the directory is missing or a document is
      malformed.
    """
    if not os.path.isdir(directory):
        raise ValueError(f"Results directory not found: {directory}")
    results = []
    for path in sorted(glob.glob(os.path.join(directory, "*.json"))):
        with open(path, "rb") as f:
            try:
                results.append(ConditionResult.from_dict(orjson.loads(f.read())))
            except ValueError as exc:
                raise ValueError(f"{path}: {exc}") from None
    logger.debug(f"loaded {len(results)} results from {directory}")
    return results


@dataclass
class ReportTable:
    """One accuracy table in percent. ``None`` marks a missing cell."""

    key: str
    title: str
    row_labels: List[str]
    column_labels: List[str]
    rows: TableRowsType
    reference: bool = False
    notes: List[Tuple[str, CellValueType]] = field(default_factory=list)

    def cell(self, row: str, column: str) -> CellValueType:
        return self.rows[self.row_labels.index(row)][self.column_labels.index(column)]


@dataclass
class EvaluationReport:
    tables: List[ReportTable] = field(default_factory=list)

    def table(self, key: str) -> ReportTable:
        for t in self.tables:
            if t.key == key:
                return t
        raise KeyError(key)


def _mean(values: Iterable[CellValueType]) -> CellValueType:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def column_averages(rows: TableRowsType) -> List[CellValueType]:
    """Arithmetic mean of each column over the rows where it is present"""
    if not rows:
        return []
    return [_mean(column) for column in zip(*rows)]


def best_per_seed_average(rows: TableRowsType) -> CellValueType:
    """Mean over rows of the best value of each row"""
    best = [
        max(v for v in row if v is not None) for row in rows if _mean(row) is not None
    ]
    return _mean(best)


def _length_label(length: float) -> str:
    return f"{length:g} s"


def build_report(
    results: Iterable[ConditionResult],
    protocol: Optional[ProtocolConfig] = None,
    include_reference: bool = True,
) -> EvaluationReport:
    """Tabulate accuracies in percent.

    With a protocol every protocol condition gets a cell, and conditions
    without results are marked missing. Without one the kinds and lengths
    found in the results are used. Cells average over seeds.

    :raises: ValueError if there are no results.
    """
    store = LabelDict()
    for r in results:
        store[r.labels()] = 100.0 * r.accuracy
    if not store:
        raise ValueError("No results to report")

    found = [labels for labels, _ in store.labelled_items()]
    if protocol is not None:
        kinds = list(protocol.stimulus_kinds)
        lengths = sorted(float(v) for v in protocol.stimulus_lengths)
    else:
        kinds = [k for k in StimulusKind if any(f["kind"] == k.value for f in found)]
        lengths = sorted({float(f["length"]) for f in found})
    seeds = sorted({int(f["seed"]) for f in found})
    longest = lengths[-1]

    report = EvaluationReport()
    for task in TASKS:
        if not any(f["task"] == task for f in found):
            continue
        rows = []
        for kind in kinds:
            row = []
            for length in lengths:
                matches = store.select(task=task, kind=kind.value, length=length)
                values = [v for _, v in matches]
                row.append(_mean(values))
            rows.append(row)
        rows.append(column_averages(rows))
        report.tables.append(
            ReportTable(
                key=f"{task}_by_length",
                title=f"{TASK_TITLES[task]} accuracy (%) by stimulus length",
                row_labels=[k.title for k in kinds] + [AVERAGE_STIMULI],
                column_labels=[_length_label(v) for v in lengths],
                rows=rows,
            )
        )

        seed_rows = []
        for seed in seeds:
            seed_rows.append(
                [
                    _mean(
                        v
                        for _, v in store.select(
                            task=task, kind=kind.value, length=longest, seed=seed
                        )
                    )
                    for kind in kinds
                ]
            )
        report.tables.append(
            ReportTable(
                key=f"{task}_by_seed",
                title=(
                    f"{TASK_TITLES[task]} accuracy (%) by seed, "
                    f"{_length_label(longest)} stimuli"
                ),
                row_labels=[f"seed #{s}" for s in seeds] + [AVERAGE_ALL],
                column_labels=[k.title for k in kinds],
                rows=seed_rows + [column_averages(seed_rows)],
                notes=[(BEST_PER_SEED, best_per_seed_average(seed_rows))],
            )
        )

    if include_reference:
        report.tables.extend(reference_tables())
    return report


# Published accuracies (%) of the listening study, kept as printed.
LENGTH_COLUMNS = ["0.5 s", "1 s", "3 s"]
KIND_ROWS = ["SAM", "FAM", "Clicks", "AM/FM", AVERAGE_STIMULI]
SUBJECT_ROWS = ["#1", "#2", "#3", "#4", "#5", AVERAGE_ALL]
SUBJECT_COLUMNS = ["SAM", "Flutter", "Clicks", "FM"]

REFERENCE_TVNT_BY_LENGTH = [
    [60.67, 66.44, 74.44],
    [54.00, 64.22, 72.67],
    [57.78, 64.67, 70.67],
    [57.33, 61.33, 71.78],
    [57.44, 64.17, 72.39],
]
REFERENCE_TVNT_BY_SUBJECT = [
    [72.22, 80.00, 70.00, 73.33],
    [86.67, 81.11, 58.89, 77.78],
    [71.11, 82.22, 90.00, 88.89],
    [77.78, 62.22, 61.11, 57.78],
    [64.44, 57.78, 73.33, 61.11],
    [74.44, 72.67, 70.67, 71.78],
]
REFERENCE_DIRECTION_BY_LENGTH = [
    [36.00, 47.33, 70.00],
    [45.33, 52.67, 60.67],
    [39.33, 51.33, 57.33],
    [37.33, 40.67, 64.00],
    [39.50, 48.00, 63.00],
]
REFERENCE_DIRECTION_BY_SUBJECT = [
    [66.67, 73.33, 63.33, 66.67],
    [86.67, 66.67, 36.67, 66.67],
    [63.33, 73.33, 86.67, 96.67],
    [73.33, 46.67, 56.67, 33.33],
    [60.00, 43.33, 43.33, 56.67],
    [70.00, 60.67, 57.33, 64.00],
]
REFERENCE_DIRECTION_BEST_PER_SUBJECT = 78.00


def reference_tables() -> List[ReportTable]:
    """The published tables, as printed. Fresh copies on every call."""

    def copy(rows: List[List[float]]) -> TableRowsType:
        return [list(row) for row in rows]

    return [
        ReportTable(
            key="reference_tvnt_by_length",
            title="Published target vs non-target accuracy (%) by stimulus length",
            row_labels=list(KIND_ROWS),
            column_labels=list(LENGTH_COLUMNS),
            rows=copy(REFERENCE_TVNT_BY_LENGTH),
            reference=True,
        ),
        ReportTable(
            key="reference_tvnt_by_subject",
            title="Published target vs non-target accuracy (%) by subject, 3 s stimuli",
            row_labels=list(SUBJECT_ROWS),
            column_labels=list(SUBJECT_COLUMNS),
            rows=copy(REFERENCE_TVNT_BY_SUBJECT),
            reference=True,
        ),
        ReportTable(
            key="reference_direction_by_length",
            title="Published direction accuracy (%) by stimulus length",
            row_labels=list(KIND_ROWS),
            column_labels=list(LENGTH_COLUMNS),
            rows=copy(REFERENCE_DIRECTION_BY_LENGTH),
            reference=True,
        ),
        ReportTable(
            key="reference_direction_by_subject",
            title="Published direction accuracy (%) by subject, 3 s stimuli",
            row_labels=list(SUBJECT_ROWS),
            column_labels=list(SUBJECT_COLUMNS),
            rows=copy(REFERENCE_DIRECTION_BY_SUBJECT),
            reference=True,
            notes=[(BEST_PER_SUBJECT, REFERENCE_DIRECTION_BEST_PER_SUBJECT)],
        ),
    ]
