#!/usr/bin/env python3
"""Closed-form statistic of exact order-2 candidates against the degree.

The count of fixed-point-free involutions grows like (d-1)!!, so the
statistic log(count)/(d log d) climbs toward 1/2; this prints the curve
for a list of degrees.

    python3 scripts/involution_curve.py
    python3 scripts/involution_curve.py --d 50..1000..50 --m 4 --delta 1/100
"""

import sys

from soficdim.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not any(a.startswith("--m") for a in argv):
        argv = ["--m", "2"] + argv
    if not any(a.startswith("--d") for a in argv):
        argv += ["--d", "50,100,200,400,800"]
    sys.exit(main(["curve"] + argv))
