"""Numerical laboratory for weighted degenerate Laplacians on finite lattices."""
from .weights import (A, RH, Apq, Cube, CubeFamily, Weight, ball_measure,
                      class_constant, cube_measure, doubling_report, dyadic_family,
                      equivalence_check, power_membership)

__version__ = "0.1.0"
