# backend/services/__init__.py
"""
Services package for geograph
One module per toolkit area: geometry, sampling, graph generation, logic,
recovery, alpha, g.e.c. probing, EF games, Urysohn extensions, acceptance.
"""

__all__ = []
