"""Allocentric scene perception: benchmark generator, hippocampally
inspired view-synthesis network, training and evaluation tooling."""

__version__ = "0.1.0"
