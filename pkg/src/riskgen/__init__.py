"""Conditional distribution forecasting lab for financial risk factors."""
__version__ = "0.1.0"
