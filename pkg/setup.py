"""
Setup script for legacy pip compatibility.
Prefer using pyproject.toml for modern installations.
"""

from setuptools import setup

# Configuration is in pyproject.toml
setup()

