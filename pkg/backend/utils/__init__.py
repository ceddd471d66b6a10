# backend/utils/__init__.py
"""
Utilities package for geograph
File codecs, artifact writers, config-file loading and logging setup
"""

__all__ = []
