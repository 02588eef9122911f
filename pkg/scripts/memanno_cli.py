#!/usr/bin/env python3
"""
memanno command-line entry point.

Usage:
    python scripts/memanno_cli.py pipeline --config memanno.yaml
    python scripts/memanno_cli.py annotate --corpus-root path/to/src --backend mock --mock-fixtures answers.json
"""

import sys
from pathlib import Path

# Add repo root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
