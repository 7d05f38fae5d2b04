"""Figure companion for the magnet laboratory.

Renders static images from the primary package's CSV/JSON artifacts and
never recomputes physics: every number shown (drifts, scan values, field
samples) is read from those files.
"""

from .figures import FigureSpec, plot  # noqa: F401

__version__ = "0.1.0"
