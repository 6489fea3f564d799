import abc
import datetime
from typing import List

from assrbci.mypy_types import CellValueType

MISSING_CELL = "—"


class IFormatter(abc.ABC):
    """Report formatter interface"""

    content_type = ""  # type: str

    @abc.abstractmethod
    def _format_table(self, table) -> List[str]:
        """
        Returns the lines representing one report table in the implemented
        format.

        :param table: a :class:`assrbci.session.ReportTable`.
        """

    @abc.abstractmethod
    def marshall(self, report) -> bytes:
        """Marshalls a report (containing many tables) into a
        specific format.

        :returns: bytes
        """

    def _format_value(self, value: CellValueType, missing: str = MISSING_CELL) -> str:
        """
        Return a cell value as a percentage with two decimals, or the
        missing marker when the cell is absent.
        """
        if value is None:
            return missing
        return f"{value:.2f}"

    def _get_timestamp(self) -> str:
        """
        Return a timestamp that can be used by a report formatter.
        """
        return datetime.datetime.now(tz=datetime.timezone.utc).isoformat(
            timespec="seconds"
        )
