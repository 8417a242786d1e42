"""Utility modules for seeding and chart rendering."""

from .seeding import cell_rng, cell_seed
from .svg import line_chart, write_line_chart

__all__ = ["cell_rng", "cell_seed", "line_chart", "write_line_chart"]
