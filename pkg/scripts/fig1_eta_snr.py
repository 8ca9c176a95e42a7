"""NLI coefficients and per-channel SNR at 25 x 80 km for both amplifier schemes.

Writes results/<scheme>/eta.csv, snr_*.csv and gnuplot files.
"""

import argparse
import sys
from pathlib import Path

from airlink import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("results/fig1"))
    p.add_argument("--full-spectrum", action="store_true")
    args = p.parse_args()
    extra = ["--full-spectrum"] if args.full_spectrum else []
    for scheme in ("edfa", "raman"):
        out = str(args.out / scheme)
        for cmd in ("eta", "snr"):
            code = cli.main([cmd, "--preset", scheme, "--out", out, *extra])
            if code:
                return code
        print(f"{scheme}: wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
