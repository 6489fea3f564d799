"""
This module reads and writes the JSON configuration file.

The file holds one object with optional ``protocol``, ``sim``, ``dsp`` and
``nbc`` sections. Each section maps field names of the matching config
class to values; absent sections and fields keep their defaults. For
example::

    {
        "protocol": {"trials_per_block": 10, "stimulus_lengths": [1, 3]},
        "sim": {"noise_level": 80.0}
    }
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Type

import orjson

from assrbci.classify import NbcOptions
from assrbci.dsp import DspConfig
from assrbci.eegsim import SimConfig
from assrbci.protocol import ProtocolConfig
from assrbci.stimgen import Direction, StimulusKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AppConfig:
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    dsp: DspConfig = field(default_factory=DspConfig)
    nbc: NbcOptions = field(default_factory=NbcOptions)


SECTIONS = {
    "protocol": ProtocolConfig,
    "sim": SimConfig,
    "dsp": DspConfig,
    "nbc": NbcOptions,
}  # type: Dict[str, Type]


def _number(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a number, got {value!r}")
    return float(value)


def _integer(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"expected an integer, got {value!r}")
    return value


def _boolean(value: Any) -> bool:
    if not isinstance(value, bool):
        raise ValueError(f"expected true or false, got {value!r}")
    return value


def _string(value: Any) -> str:
    if not isinstance(value, str):
        raise ValueError(f"expected a string, got {value!r}")
    return value


def _list(item: Callable[[Any], Any]) -> Callable[[Any], tuple]:
    def convert(value: Any) -> tuple:
        if not isinstance(value, list):
            raise ValueError(f"expected a list, got {value!r}")
        return tuple(item(v) for v in value)

    return convert


def _optional(convert: Callable[[Any], Any]) -> Callable[[Any], Any]:
    return lambda value: None if value is None else convert(value)


def _direction_frequencies(value: Any) -> Dict[Direction, float]:
    if not isinstance(value, dict):
        raise ValueError(f"expected an object, got {value!r}")
    return {Direction(k): _number(v) for k, v in value.items()}


# How each field is read from JSON. Fields not listed are numbers.
CONVERTERS = {
    "protocol": {
        "direction_frequencies": _direction_frequencies,
        "trials_per_block": _integer,
        "blocks": _list(Direction),
        "stimulus_lengths": _list(_number),
        "stimulus_kinds": _list(StimulusKind),
        "rng_seed": _integer,
    },
    "sim": {
        "n_channels": _integer,
        "channel_phase_lags": _optional(_list(_number)),
        "rng_seed": _integer,
    },
    "dsp": {
        "preprocess": _boolean,
        "n": _integer,
        "m": _integer,
        "max_numtaps": _integer,
    },
    "nbc": {"priors": _string},
}  # type: Dict[str, Dict[str, Callable[[Any], Any]]]


def _encode(value: Any) -> Any:
    if isinstance(value, (Direction, StimulusKind)):
        return value.value
    if isinstance(value, dict):
        return {_encode(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    return value


def _section_from_dict(section: str, doc: Any):
    cls = SECTIONS[section]
    if not isinstance(doc, dict):
        raise ValueError(f"{section}: expected an object, got {doc!r}")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for name, value in doc.items():
        if name not in names:
            raise ValueError(f"{section}.{name}: unknown field")
        convert = CONVERTERS[section].get(name, _number)
        try:
            kwargs[name] = convert(value)
        except ValueError as exc:
            raise ValueError(f"{section}.{name}: {exc}") from None
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ValueError(f"{section}: {exc}") from None


def config_from_dict(doc: Any) -> AppConfig:
    """Build a config from a decoded JSON document.

    :raises: ValueError naming ``section.field`` for unknown or invalid
      entries.
    """
    if not isinstance(doc, dict):
        raise ValueError("configuration must be a JSON object")
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ValueError(f"unknown configuration section(s): {sorted(unknown)}")
    sections = {
        name: _section_from_dict(name, doc[name]) for name in SECTIONS if name in doc
    }
    return AppConfig(**sections)


def config_to_dict(cfg: AppConfig) -> Dict[str, Any]:
    return {
        name: _encode(dataclasses.asdict(getattr(cfg, name))) for name in SECTIONS
    }


def load_config(path) -> AppConfig:
    """Read a configuration file.

    :raises: ValueError if the file is missing, not JSON or invalid.
    """
    try:
        with open(path, "rb") as f:
            content = f.read()
    except FileNotFoundError:
        raise ValueError(f"Configuration file not found: {path}") from None
    try:
        doc = orjson.loads(content)
    except orjson.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from None
    try:
        cfg = config_from_dict(doc)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    logger.debug(f"loaded configuration from {path}")
    return cfg


def dump_config(cfg: AppConfig, path) -> None:
    """Write the effective configuration"""
    with open(path, "wb") as f:
        f.write(orjson.dumps(config_to_dict(cfg), option=orjson.OPT_INDENT_2))
