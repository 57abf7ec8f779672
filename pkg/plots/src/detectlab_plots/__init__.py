"""Publication figures from detectlab's CSV/JSON output files."""

from .figures import FigureRecipe, plot

__version__ = "0.1.0"

__all__ = ["FigureRecipe", "plot"]
