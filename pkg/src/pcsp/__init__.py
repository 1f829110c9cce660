"""Workbench for promise constraint satisfaction: polymorphisms, minor conditions, relaxations."""

__version__ = "0.1.0"
