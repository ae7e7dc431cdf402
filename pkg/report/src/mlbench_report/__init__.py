"""Turns mlbench experiment outputs into a PDF report.

A read-only consumer of the documented manifest and CSV formats; it
plots columns as they appear in the files and computes no statistics
of its own.
"""

from .report import FIGURE_NAMES, ReportError, ReportSpec, render_report

__all__ = ["FIGURE_NAMES", "ReportError", "ReportSpec", "render_report"]
