"""Parallel SGD and neuroevolution benchmark suite with TDP energy accounting."""

__version__ = "0.1.0"
