"""Figure rendering for banditsim CSV outputs.

Consumes only the simulator's published file formats (results.csv,
summary.csv, lower_bound.csv); no simulation logic lives here.
"""
from .render import FigureJob, FIGURE_KINDS, render

__version__ = "0.1.0"

__all__ = ["FigureJob", "FIGURE_KINDS", "render", "__version__"]
