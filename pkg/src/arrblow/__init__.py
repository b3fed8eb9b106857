"""Embedding engine for arrangeable graphs in blown-up hosts."""

__version__ = "0.1.0"
