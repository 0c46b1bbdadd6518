#!/usr/bin/env python3
"""
ssprofile - Main Entry Point

Runs the ssprofile CLI from a source checkout without installing the package.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from ssprofile.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
