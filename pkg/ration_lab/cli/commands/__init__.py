"""
CLI command groups
"""
from . import bounds, extensions, gen, run, seir, table2

__all__ = ["bounds", "extensions", "gen", "run", "seir", "table2"]
