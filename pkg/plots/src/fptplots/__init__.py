"""Figure rendering for fptcage CSV artifacts."""

from .render import RecipeError, read_csv_columns, render

__all__ = ["RecipeError", "read_csv_columns", "render"]
__version__ = "0.1.0"
