"""Feasibility Pump and Annealed Feasibility Pump heuristics for mixed-integer programs."""

__version__ = "0.1.0"
