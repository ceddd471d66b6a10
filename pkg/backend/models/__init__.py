# backend/models/__init__.py
"""
Models package for geograph
Spaces, samples and graphs, formulas, rational metrics, file schemas and
experiment configs
"""

__all__ = []
