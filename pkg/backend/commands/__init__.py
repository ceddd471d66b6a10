# backend/commands/__init__.py
"""
CLI subcommands; each module registers one parser on the driver in main.py
"""
