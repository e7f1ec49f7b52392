"""Line plots and zero-centered heatmaps from sweep CSVs."""

from .render import PlotSpec, RenderError, load_table, render

__version__ = "0.1.0"
