"""Publication-style figures from zinbgt plot-data tables."""

from .render import KINDS, PlotSpec, render

__version__ = "0.1.0"
