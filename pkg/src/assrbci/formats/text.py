""" This module implements the plain text report formatter """
# imports only used for type annotations
from typing import Dict, List, Union, cast

from assrbci.mypy_types import LabelsType

from .base import IFormatter

LABEL_SEPARATOR_FMT = ","
LINE_SEPARATOR_FMT = "\n"
COLUMN_GAP = "  "
REFERENCE_MARK = "[reference values, not recomputed]"

TEXT_CONTENT_TYPE = "text/plain; charset=utf-8"


class TextFormatter(IFormatter):
    """This formatter renders reports as aligned plain text tables.

    The following conventions apply:

      - Each table starts with its title underlined by ``=`` characters.
        Published reference tables carry a trailing marker so they are
        never mistaken for computed results.
      - Row labels are left aligned, values right aligned with two
        decimals, missing cells shown as ``—``.
      - Notes such as the best-stimulus average follow the table as
        ``label: value`` lines.
      - Tables are separated by a blank line.
    """

    content_type = TEXT_CONTENT_TYPE

    def __init__(self, timestamp: bool = False) -> None:
        """
        :param timestamp: a boolean flag that will add a generation time
          line to the output when True. Default value is False.
        """
        self.timestamp = timestamp

    def _format_table(self, table) -> List[str]:
        title = table.title
        if table.reference:
            title = f"{title} {REFERENCE_MARK}"
        lines = [title, "=" * len(title)]

        cells = [[self._format_value(v) for v in row] for row in table.rows]
        label_width = max(len(label) for label in table.row_labels)
        widths = [
            max([len(header)] + [len(row[i]) for row in cells])
            for i, header in enumerate(table.column_labels)
        ]
        header = " " * label_width + "".join(
            COLUMN_GAP + h.rjust(w) for h, w in zip(table.column_labels, widths)
        )
        lines.append(header.rstrip())
        for label, row in zip(table.row_labels, cells):
            line = label.ljust(label_width) + "".join(
                COLUMN_GAP + c.rjust(w) for c, w in zip(row, widths)
            )
            lines.append(line)
        for label, value in table.notes:
            lines.append(f"{label}: {self._format_value(value)}")
        return lines

    def marshall_lines(self, report) -> List[str]:
        """
        Marshalls a report into a sequence of strings.

        :return: a list of strings.
        """
        lines = []  # type: List[str]
        if self.timestamp:
            lines.extend([f"# generated {self._get_timestamp()}", ""])
        for i, table in enumerate(report.tables):
            if i:
                lines.append("")
            lines.extend(self._format_table(table))
        return lines

    def marshall(self, report) -> bytes:
        """Marshalls a report (containing tables) into a bytes object"""
        lines = self.marshall_lines(report)
        # Needs EOF
        lines.append("")
        return LINE_SEPARATOR_FMT.join(lines).encode("utf-8")

    def _format_line(self, name: str, labels: LabelsType, value: float) -> str:
        labels_str = ""  # type: str
        if labels:
            _labels = [f'{k}="{v}"' for k, v in sorted(labels.items())]
            labels_str = LABEL_SEPARATOR_FMT.join(_labels)
            labels_str = f"{{{labels_str}}}"
        return f"{name}{labels_str} {value}"

    def _format_summary(
        self,
        summary_labels: LabelsType,
        summary_value_dict: Dict[Union[float, str], float],
        name: str,
    ) -> List[str]:
        """
        :param summary_labels: the labels of one summary group.
        :param summary_value_dict: a dict containing keys for each
          quantile as well as the sum and count fields.
        :param name: the summary name.
        """
        results = []  # type: List[str]
        for k, v in summary_value_dict.items():
            # Start from a fresh dict for the labels (new or with preset data)
            labels = dict(summary_labels) if summary_labels else {}
            # Quantiles need labels and not special name (like sum and count)
            if not isinstance(k, float):
                name_str = f"{name}_{k}"
            else:
                labels["quantile"] = str(k)
                name_str = name
            results.append(self._format_line(name_str, labels, v))
        return results

    def marshall_summary(self, summary, name: str = "plv_mean") -> bytes:
        """Marshalls a :class:`assrbci.features.PlvSummary` into lines of
        ``name{labels} value``."""
        lines = []  # type: List[str]
        for labels, values in summary.get_all():
            values = cast(Dict[Union[float, str], float], values)  # typing check
            lines.extend(self._format_summary(labels, values, name))
        lines.append("")
        return LINE_SEPARATOR_FMT.join(lines).encode("utf-8")
