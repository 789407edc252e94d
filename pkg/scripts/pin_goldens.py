#!/usr/bin/env python3
"""Regenerate the committed golden values for the tiny-universe oracle.

Usage: python scripts/pin_goldens.py [out_path]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from longtail_lab.datamodel import ModelParams
from longtail_lab.oracle import build_universe, write_goldens


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "tests" / "goldens" / "tiny_universe.txt"
    )
    params = ModelParams(L=2, n_w=4, n_c=2, R=10, n_spl=2)
    universe = build_universe(params)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fp:
        write_goldens(universe, ts=[0, 1, 3, 7, 1999], fp=fp)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
