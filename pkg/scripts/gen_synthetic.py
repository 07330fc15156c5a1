#!/usr/bin/env python3
"""Regenerate the checked-in synthetic dataset.

Run from the repository root:

    python3 scripts/gen_synthetic.py --out data/synthetic

The generator is fully seeded, so rerunning with the same arguments
reproduces every file byte for byte.
"""

import argparse
from pathlib import Path

from dupvid.synthetic import SyntheticConfig, generate_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("data/synthetic"))
    parser.add_argument("--seed", type=int, default=SyntheticConfig().seed)
    args = parser.parse_args()
    manifest = generate_dataset(args.out, SyntheticConfig(seed=args.seed))
    print(f"wrote {manifest}")


if __name__ == "__main__":
    main()
