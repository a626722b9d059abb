#!/usr/bin/env python
# file __init__.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Command line tools of nfloc."""
