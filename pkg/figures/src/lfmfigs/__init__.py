"""Render calibration-study figures from lfmcal scenario CSV artifacts.

This package only reads the documented CSV schemas; it never imports the
simulation library.
"""

from .render import FigureError, FigureSpec, RenderResult, render, spec_for

__version__ = "0.1.0"
