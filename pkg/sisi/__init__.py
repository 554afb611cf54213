"""
SISI Operator Toolkit - Core Package

This package contains the discrete-time SISI operator, its fixed points, their
stability, and the batch experiment harness built on top of them.
"""

__version__ = "1.0.0"
