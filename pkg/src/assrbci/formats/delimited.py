""" This module implements the CSV report formatter """
import csv
import io
from typing import List

from .base import IFormatter

CSV_CONTENT_TYPE = "text/csv; charset=utf-8"
CSV_HEADER = ("table", "row", "column", "value")


class CsvFormatter(IFormatter):
    """This formatter renders reports as one ``table,row,column,value``
    record per cell.

    Missing cells have an empty value. Notes are written with an empty
    column. Reference tables are recognizable by their ``reference_`` key
    prefix.
    """

    content_type = CSV_CONTENT_TYPE

    def _format_table(self, table) -> List[str]:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for label, row in zip(table.row_labels, table.rows):
            for column, value in zip(table.column_labels, row):
                writer.writerow(
                    (table.key, label, column, self._format_value(value, missing=""))
                )
        for label, value in table.notes:
            value_str = self._format_value(value, missing="")
            writer.writerow((table.key, label, "", value_str))
        return buf.getvalue().splitlines()

    def marshall(self, report) -> bytes:
        """Marshalls a report into CSV bytes with a header line"""
        lines = [",".join(CSV_HEADER)]
        for table in report.tables:
            lines.extend(self._format_table(table))
        lines.append("")
        return "\n".join(lines).encode("utf-8")
