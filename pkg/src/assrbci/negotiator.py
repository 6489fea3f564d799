import logging
from typing import Dict, Sequence, Set, Type

from . import formats

logger = logging.getLogger(__name__)

# type aliases
FormatterType = Type[formats.base.IFormatter]

FORMATTERS = {
    "text": formats.text.TextFormatter,
    "csv": formats.delimited.CsvFormatter,
}  # type: Dict[str, FormatterType]


def negotiate(format_names: Sequence[str]) -> FormatterType:
    """Negotiate a report format by scanning through a list of requested
    format names and selecting the first one that is supported.

    If no supported format is requested then the text formatter is used.

    The formatter returned by this function is used to render a report.

    :param format_names: a list of format names, each item may itself hold
      several names separated by ``,`` or ``;``.

    :returns: a formatter class to form up the report into the
      appropriate representation.
    """
    requested = parse_formats(format_names)

    formatter = formats.text.TextFormatter  # type: FormatterType
    for name in _ordered(format_names):
        if name in FORMATTERS:
            formatter = FORMATTERS[name]
            break

    logger.debug(f"negotiating {requested} resulted in choosing {formatter.__name__}")

    return formatter


def _split(item: str) -> Sequence[str]:
    return [i.strip().lower() for i in item.replace(";", ",").split(",") if i.strip()]


def _ordered(format_names: Sequence[str]) -> Sequence[str]:
    names = []
    for item in format_names:
        names.extend(_split(item))
    return names


def parse_formats(format_names: Sequence[str]) -> Set[str]:
    """Return the set of format names in the request"""
    return set(_ordered(format_names))
