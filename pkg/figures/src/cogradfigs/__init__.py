"""Batch figure renderer for run-log CSVs.

Pure display: the renderer never recomputes metrics, it only draws columns
that already exist in the delimited artifacts, and byte-identical inputs
produce byte-identical vector-graphics output.
"""

from .render import LAYOUTS, FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "LAYOUTS", "SchemaError", "render"]
__version__ = "0.1.0"
