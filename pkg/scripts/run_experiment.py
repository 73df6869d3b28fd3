"""
Command-line entry point for calibration, property suites and the Monte Carlo experiments.
Run with: python scripts/run_experiment.py <calibrate|verify|local|global-sweep|oscillating-sweep>
          [--config config/default_experiment.json] [--seed N] [--paths N] [--out DIR] [--workers N]
"""
import logging
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.settings import settings
from src.experiment.cli import main

logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)

if __name__ == "__main__":
    sys.exit(main())
