"""Command-line interface and figure reproduction."""

from .config import RunConfig, load_config, parse_config
from .figures import FIGURES, reproduce_figure
from .main import main

__all__ = ["FIGURES", "RunConfig", "load_config", "main", "parse_config", "reproduce_figure"]
