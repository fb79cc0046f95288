"""Run every figure preset through the CLI and write the results under runs/.

    python scripts/reproduce_figures.py [--out runs] [--only fig3a fig4b]
"""

import argparse
import sys

from hpzlab.cli import main
from hpzlab.presets import PRESETS


def run(out, names):
    codes = {}
    for name in names:
        print(f"== {name}")
        codes[name] = main(["preset", name, "--out", out])
    return codes


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--only", nargs="*", default=list(PRESETS))
    codes = run(ap.parse_args().out, ap.parse_args().only)
    bad = {k: v for k, v in codes.items() if v}
    for k, v in bad.items():
        print(f"{k}: exit {v}", file=sys.stderr)
    sys.exit(max(bad.values(), default=0))
