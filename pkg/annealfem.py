#!/usr/bin/env python3
"""
annealfem - command line launcher
Usage: python3 annealfem.py solve problems/truss_a.json --out results --seed 7
"""

import logging
import sys

from config import LOG_FORMAT, LOG_LEVEL
from modules.cli import main

if __name__ == '__main__':
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT, stream=sys.stderr)
    sys.exit(main())
