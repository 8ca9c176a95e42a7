"""Compare the 49.3 Tbit/s C+L record over 9100 km with the modelled DP-16QAM EDC AIR.

Runs both span-remainder policies (floor: 113 spans, ceil: 114 spans).
"""

import argparse
import sys
from pathlib import Path

from airlink import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("results/record"))
    args = p.parse_args()
    for policy in ("floor", "ceil"):
        print(f"remainder policy {policy}:")
        code = cli.main(["record-check", "--remainder", policy, "--out", str(args.out / policy)])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
