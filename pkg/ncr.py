#!/usr/bin/env python
"""Command line entry point; see `python ncr.py --help`."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from cli.main import main  # noqa: E402

if __name__ == '__main__':
    main()
