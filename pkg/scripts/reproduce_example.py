"""Reproduce the worked example end to end and write every artifact to OUT."""

import sys

from toric_geodesic.cli import cmd_example
from toric_geodesic.config import ExperimentConfig

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/example"
    summary = cmd_example(ExperimentConfig.example(), out)
    for k, v in summary.items():
        print(f"{k:>10}: {v}")
