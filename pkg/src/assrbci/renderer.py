from typing import Sequence, Tuple

from .formats.base import IFormatter
from .negotiator import negotiate
from .session import EvaluationReport


def render(report: EvaluationReport, format_names: Sequence[str]) -> Tuple[bytes, str]:
    """Render the tables in this report to a specific format.

    The format chosen is determined by scanning through the requested
    format names and selecting the first supported one. If no format
    information is provided then Text format is used as the default.

    :param report: an evaluation report that contains the tables to be
      rendered into a specific format.

    :param format_names: a list of requested format names.

    :returns: a 2-tuple where the first item is a bytes object that
        represents the formatted report and the second item is the content
        type of that representation.
    """
    if not isinstance(report, EvaluationReport):
        raise TypeError(f"report must be an EvaluationReport, got: {type(report)}")

    if not isinstance(format_names, (set, list, tuple)):
        raise TypeError(f"format_names must be a sequence, got: {type(format_names)}")

    Formatter = negotiate(format_names)
    formatter = Formatter()  # type: IFormatter

    content = formatter.marshall(report)
    return content, formatter.content_type
