#!/usr/bin/env python3
"""Run every bound-certification suite on the 2-point transitive relation.

Writes the groupoid file next to the output, enumerates every member at
the requested degree and tolerance, and certifies the counting,
cylinder, equivariance, linearity, pair-construction and scaling bounds
against their stated constants.

    python3 scripts/lemma_sweep.py            # d=6, delta=1/10
    python3 scripts/lemma_sweep.py 4 1/20 42  # degree, delta, seed
"""

import sys
import tempfile
from pathlib import Path

from soficdim.cli import main
from soficdim.groupoid import transitive_groupoid

if __name__ == "__main__":
    d = sys.argv[1] if len(sys.argv) > 1 else "6"
    delta = sys.argv[2] if len(sys.argv) > 2 else "1/10"
    seed = sys.argv[3] if len(sys.argv) > 3 else "0"
    gpd = Path(tempfile.gettempdir()) / "r2.gpd"
    transitive_groupoid(2).save(gpd)
    sys.exit(main(["verify", "--suite", "all", "--source", str(gpd),
                   "--d", d, "--delta", delta, "--seed", seed,
                   "--partitions", "10", "--instances", "10"]))
