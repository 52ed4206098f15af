#!/usr/bin/env python3
"""
Main entry point for the tube parametrization toolkit.

Usage:
    python main.py fit --in annotations.jsonl --out tubes.jsonl
    python main.py eval --det detections.jsonl --gt annotations.jsonl --out report.json
    python main.py gradcheck --seed 7 --trials 100
"""

import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from backend.cli import main

if __name__ == "__main__":
    sys.exit(main())
