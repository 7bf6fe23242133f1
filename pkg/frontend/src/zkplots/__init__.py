"""Read-only figure rendering over zkdamp's CSV/summary output contract."""

from .figures import FIGURE_KINDS, FigureError, FigureSpec, render

__version__ = "0.1.0"
