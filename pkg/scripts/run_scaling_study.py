#!/usr/bin/env python3
"""Extrapolate the unit-coefficient reference level, then check the
constant-coefficient level law against it (out/scaling/<command>/)."""
import sys
from pathlib import Path

from regfrac import cli

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "scaling.cfg"


def main() -> int:
    worst = 0
    for command in ("oracle-d", "verify-scaling"):
        out = Path("out") / "scaling" / command
        print(f"== {command} -> {out}")
        worst = max(worst, cli.main([command, "--config", str(CONFIG),
                                     "--out", str(out)]))
    return worst


if __name__ == "__main__":
    sys.exit(main())
