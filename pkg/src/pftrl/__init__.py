"""Tabular perturbed-FTRL solvers for two-player zero-sum extensive-form games."""

__version__ = "0.1.0"
