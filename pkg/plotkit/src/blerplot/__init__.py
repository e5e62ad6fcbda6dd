"""Render block-error-rate curves from simulator CSV output."""

from .render import PlotSpec, build_figure, load_rows, render

__all__ = ["PlotSpec", "build_figure", "load_rows", "render"]
__version__ = "0.1.0"
