"""AIR against distance for EDC, FF-NLC and shaped FF-NLC, with the 256/1024QAM crossover.

Writes results/fig3/<scheme>/sweep.csv and crossover.csv.  The default grid
runs from 1040 km to 10000 km in 480 km steps; --quick uses a coarser grid.
"""

import argparse
import sys
from pathlib import Path

from airlink import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("results/fig3"))
    p.add_argument("--quick", action="store_true", help="coarse 1600 km grid")
    args = p.parse_args()
    distances = "800:10400:1600" if args.quick else "1040:10000:480"
    for scheme in ("edfa", "raman"):
        out = args.out / scheme
        code = cli.main(["sweep", "--preset", scheme, "--distances", distances, "--modes", "edc,ffnlc",
                         "--formats", "16,64,256,1024", "--shaping", "uniform,mb", "--out", str(out)])
        if code:
            return code
        print(f"{scheme}:")
        print((out / "crossover.csv").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
