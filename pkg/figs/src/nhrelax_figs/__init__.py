"""Figure rendering for nhrelax CSV artifacts."""

__version__ = "0.1.0"

from .recipes import FIGURE_IDS, FigureRecipe, SchemaMismatch, render  # noqa: F401
