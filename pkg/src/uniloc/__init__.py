"""uniloc: a numerical laboratory for random unitary band operators."""

__version__ = "0.1.0"
