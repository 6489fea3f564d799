"""
This module holds the epoch containers and their on-disk format.

An epoch set is stored as one directory per (kind, length) condition. The
directory holds a ``manifest.json`` describing the condition and one binary
file per epoch. Each binary file starts with a fixed little-endian header
followed by float32 samples in channel-major order.
"""

import logging
import os
import struct
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Tuple

import numpy as np
import orjson

from assrbci.mypy_types import EegArray
from assrbci.stimgen import Direction, StimulusKind

logger = logging.getLogger(__name__)

MAGIC = b"ASSR"
FORMAT_VERSION = 1
# magic, version, n_channels, L, eeg_rate, f_m * 1000, direction, attended
HEADER = struct.Struct("<4sHHIdiBB")
MANIFEST_NAME = "manifest.json"
SAMPLE_DTYPE = np.dtype("<f4")
# 10/10 sites of the 16-channel montage, in channel order
ELECTRODE_SITES = (
    "F3",
    "F4",
    "C1",
    "C2",
    "C3",
    "C4",
    "C5",
    "C6",
    "T7",
    "T8",
    "CP1",
    "CP2",
    "P1",
    "P2",
    "Pz",
    "Cz",
)


@dataclass(frozen=True)
class Epoch:
    """
    One stimulus-locked multichannel EEG segment.

    :param data: an ``n_channels x L`` array of samples.

    :param eeg_rate: samples per second.

    :param f_m: modulation frequency of the evoking stimulus in Hz.

    :param direction: direction the stimulus came from.

    :param attended: True when the stimulus was the trial's target.

    :param kind: stimulus kind of the condition.

    :param length: stimulus length of the condition, in seconds.

    :param trial: 1-based trial number.

    :param onset: stimulus onset in seconds from session start.
    """

    data: EegArray
    eeg_rate: float
    f_m: float
    direction: Direction
    attended: bool
    kind: StimulusKind
    length: float
    trial: int = 0
    onset: float = 0.0

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        if data.ndim != 2:
            raise ValueError(f"Epoch data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 2:
            raise ValueError("Epoch data must hold at least 2 channels")
        if not np.all(np.isfinite(data)):
            raise ValueError("Epoch data contains non-finite samples")
        if not self.eeg_rate > 0:
            raise ValueError(f"eeg_rate must be positive, got {self.eeg_rate}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "length", float(self.length))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def condition(self) -> Tuple[StimulusKind, float]:
        return (self.kind, self.length)

    def with_data(self, data: np.ndarray) -> "Epoch":
        """Copy of this epoch carrying new samples"""
        return replace(self, data=data)


@dataclass
class EpochSet:
    """All epochs of one (kind, length) condition"""

    kind: StimulusKind
    length: float
    seed: int
    epochs: List[Epoch] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.epochs)

    def __iter__(self):
        return iter(self.epochs)

    @property
    def dirname(self) -> str:
        return condition_dirname(self.kind, self.length)


def condition_dirname(kind: StimulusKind, length: float) -> str:
    """Directory name of a condition, e.g. ``sam_0.5s`` or ``clicks_3s``"""
    return f"{kind.value}_{float(length):g}s"


def epoch_filename(epoch: Epoch) -> str:
    return f"trial_{epoch.trial:02d}_{epoch.direction.value}.bin"


def encode_epoch(epoch: Epoch) -> bytes:
    header = HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        epoch.n_channels,
        epoch.n_samples,
        float(epoch.eeg_rate),
        int(round(epoch.f_m * 1000)),
        epoch.direction.code,
        int(bool(epoch.attended)),
    )
    payload = np.ascontiguousarray(epoch.data, dtype=SAMPLE_DTYPE).tobytes()
    return header + payload


def decode_epoch(
    buf: bytes, kind: StimulusKind, length: float, trial: int = 0, onset: float = 0.0
) -> Epoch:
    """Decode an epoch file. Header fields that the file does not store are
    supplied by the caller, usually from the manifest.

    :raises: ValueError if the header or payload is corrupt.
    """
    if len(buf) < HEADER.size:
        raise ValueError(f"Epoch file is truncated: {len(buf)} bytes")
    magic, version, n_channels, n_samples, rate, f_m_milli, code, attended = (
        HEADER.unpack_from(buf)
    )
    if magic != MAGIC:
        raise ValueError(f"Bad epoch magic: {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"Unsupported epoch format version: {version}")
    if attended not in (0, 1):
        raise ValueError(f"Bad attended flag: {attended}")
    expected = HEADER.size + n_channels * n_samples * SAMPLE_DTYPE.itemsize
    if len(buf) != expected:
        raise ValueError(
            f"Epoch payload size mismatch: expected {expected} bytes, got {len(buf)}"
        )
    data = np.frombuffer(buf, dtype=SAMPLE_DTYPE, offset=HEADER.size).reshape(
        n_channels, n_samples
    )
    return Epoch(
        data=data.astype(np.float32),
        eeg_rate=rate,
        f_m=f_m_milli / 1000,
        direction=Direction.from_code(code),
        attended=bool(attended),
        kind=kind,
        length=length,
        trial=trial,
        onset=onset,
    )


def write_epoch(epoch: Epoch, path) -> None:
    with open(path, "wb") as f:
        f.write(encode_epoch(epoch))


def read_epoch(path, kind: StimulusKind, length: float, trial: int = 0) -> Epoch:
    with open(path, "rb") as f:
        buf = f.read()
    try:
        return decode_epoch(buf, kind, length, trial)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def channel_labels(n_channels: int) -> Tuple[str, ...]:
    """Electrode site of every channel; ``Ch1`` .. ``ChN`` unless the montage
    has 16 channels"""
    if n_channels == len(ELECTRODE_SITES):
        return ELECTRODE_SITES
    return tuple(f"Ch{c}" for c in range(1, n_channels + 1))


def _manifest(eset: EpochSet) -> Dict[str, Any]:
    first = eset.epochs[0] if eset.epochs else None
    return {
        "format_version": FORMAT_VERSION,
        "kind": eset.kind.value,
        "length": float(eset.length),
        "seed": int(eset.seed),
        "eeg_rate": float(first.eeg_rate) if first else None,
        "n_channels": first.n_channels if first else None,
        "channel_labels": list(channel_labels(first.n_channels)) if first else [],
        "metadata": eset.metadata,
        "epochs": [
            {
                "file": epoch_filename(e),
                "trial": e.trial,
                "direction": e.direction.value,
                "f_m": float(e.f_m),
                "attended": bool(e.attended),
                "onset": float(e.onset),
            }
            for e in eset.epochs
        ],
    }


def save_epoch_set(eset: EpochSet, root) -> str:
    """Write an epoch set below ``root``.

    :returns: the path of the condition directory.
    """
    path = os.path.join(root, eset.dirname)
    os.makedirs(path, exist_ok=True)
    for epoch in eset.epochs:
        write_epoch(epoch, os.path.join(path, epoch_filename(epoch)))
    with open(os.path.join(path, MANIFEST_NAME), "wb") as f:
        f.write(orjson.dumps(_manifest(eset), option=orjson.OPT_INDENT_2))
    logger.debug(f"saved {len(eset)} epochs to {path}")
    return path


def _field(doc: Dict[str, Any], name: str, where: str) -> Any:
    try:
        return doc[name]
    except (KeyError, TypeError):
        raise ValueError(f"{where}: missing field '{name}'") from None


def load_epoch_set(path) -> EpochSet:
    """Read a condition directory written by :func:`save_epoch_set`.

    :raises: ValueError if the directory or manifest is missing or corrupt,
      or if a file disagrees with its manifest entry.
    """
    if not os.path.isdir(path):
        raise ValueError(f"Epoch directory not found: {path}")
    manifest_path = os.path.join(path, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise ValueError(f"No {MANIFEST_NAME} in {path}")
    with open(manifest_path, "rb") as f:
        doc = orjson.loads(f.read())
    if not isinstance(doc, dict):
        raise ValueError(f"{manifest_path}: manifest must be a JSON object")
    if _field(doc, "format_version", manifest_path) != FORMAT_VERSION:
        raise ValueError(f"{manifest_path}: unsupported format version")

    kind = StimulusKind(_field(doc, "kind", manifest_path))
    length = float(_field(doc, "length", manifest_path))
    eset = EpochSet(
        kind=kind,
        length=length,
        seed=int(_field(doc, "seed", manifest_path)),
        metadata=doc.get("metadata") or {},
    )
    labels = doc.get("channel_labels") or []
    n_channels = doc.get("n_channels")
    if labels and n_channels is not None and len(labels) != n_channels:
        raise ValueError(
            f"{manifest_path}: {len(labels)} channel labels for {n_channels} channels"
        )
    for i, entry in enumerate(_field(doc, "epochs", manifest_path)):
        where = f"{manifest_path}: epoch {i}"
        trial = int(_field(entry, "trial", where))
        epoch = read_epoch(
            os.path.join(path, _field(entry, "file", where)), kind, length, trial
        )
        if epoch.direction.value != _field(entry, "direction", where):
            raise ValueError(f"{where}: direction disagrees with epoch header")
        if bool(_field(entry, "attended", where)) != epoch.attended:
            raise ValueError(f"{where}: attended flag disagrees with epoch header")
        eset.epochs.append(replace(epoch, onset=float(entry.get("onset", 0.0))))
    logger.debug(f"loaded {len(eset)} epochs from {path}")
    return eset


def find_condition_dirs(root) -> List[str]:
    """Condition directories below ``root``, sorted by name. ``root`` itself
    is returned when it is a condition directory.

    :raises: ValueError if ``root`` is not a directory.
    """
    if not os.path.isdir(root):
        raise ValueError(f"Epoch directory not found: {root}")
    if os.path.isfile(os.path.join(root, MANIFEST_NAME)):
        return [root]
    return [
        os.path.join(root, name)
        for name in sorted(os.listdir(root))
        if os.path.isfile(os.path.join(root, name, MANIFEST_NAME))
    ]
