#!/usr/bin/env python
# Package metadata and discovery live in pyproject.toml.
from setuptools import setup

if __name__ == "__main__":
    setup()
