"""Per-channel mutual information at 25 x 80 km for 16/64/256/1024QAM, uniform and shaped.

Writes results/fig2/<scheme>/air_*.csv and air_summary.csv.
"""

import argparse
import sys
from pathlib import Path

from airlink import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("results/fig2"))
    p.add_argument("--formats", default="16,64,256,1024")
    args = p.parse_args()
    for scheme in ("edfa", "raman"):
        out = args.out / scheme
        code = cli.main(["air", "--preset", scheme, "--modes", "edc,ffnlc,ase", "--formats", args.formats,
                         "--shaping", "uniform,mb", "--out", str(out)])
        if code:
            return code
        print(f"{scheme}:")
        print((out / "air_summary.csv").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
