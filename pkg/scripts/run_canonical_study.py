#!/usr/bin/env python3
"""Full study of the canonical dip family: ground state, concentration
sweep, frozen-level scan, and the norm audit, one output directory each.

Writes out/canonical/<command>/; exits with the worst command status.
"""
import sys
from pathlib import Path

from regfrac import cli

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "canonical.cfg"
COMMANDS = ("solve", "sweep-eps", "scan-cxi", "check-norm")


def main() -> int:
    worst = 0
    for command in COMMANDS:
        out = Path("out") / "canonical" / command
        print(f"== {command} -> {out}")
        rc = cli.main([command, "--config", str(CONFIG), "--out", str(out)])
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())
