import unittest

from assrbci import formats, render
from assrbci.session import EvaluationReport, ReportTable


def make_report():
    return EvaluationReport(
        [
            ReportTable(
                key="tvnt_by_length",
                title="Target vs non-target accuracy (%) by stimulus length",
                row_labels=["SAM"],
                column_labels=["1 s", "3 s"],
                rows=[[61.5, None]],
            )
        ]
    )


class TestRenderer(unittest.TestCase):
    def test_invalid_report(self):
        """check only a valid report can be provided"""
        for invalid_report in ["nope", dict(), list()]:
            with self.assertRaises(Exception) as cm:
                render(invalid_report, [])
            self.assertIn("report must be an EvaluationReport, got:", str(cm.exception))

    def test_invalid_format_names(self):
        """check only valid format_names types can be provided"""
        for format_names in ["nope", None, 42, dict()]:
            with self.assertRaises(Exception) as cm:
                render(make_report(), format_names)
            self.assertIn("format_names must be a sequence, got:", str(cm.exception))

    def test_render_default(self):
        """check reports can be rendered using the default format"""
        content, content_type = render(make_report(), ("json", "*"))
        self.assertEqual(content_type, formats.text.TEXT_CONTENT_TYPE)
        self.assertIsInstance(content, bytes)

    def test_render_text(self):
        """check reports can be rendered using text format"""
        content, content_type = render(make_report(), ["text"])
        self.assertEqual(content_type, formats.text.TEXT_CONTENT_TYPE)
        self.assertIn("61.50", content.decode("utf-8"))

    def test_render_csv(self):
        """check reports can be rendered using CSV format"""
        content, content_type = render(make_report(), ["csv"])
        self.assertEqual(content_type, formats.delimited.CSV_CONTENT_TYPE)
        self.assertTrue(content.startswith(b"table,row,column,value\n"))
