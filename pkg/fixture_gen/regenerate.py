#!/usr/bin/env python3
"""Regenerate every committed fixture from its stored spec.

Usage: python regenerate.py [--out-root ../fixtures] [--from-specs]

Without --from-specs the canonical fixture set defined here is
written; with it, each existing <fixture>/spec.json is re-run, which
must reproduce predictions.csv byte-identically.
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent / "src"))

from fixture_gen import FixtureSpec, generate_fixture, load_spec  # noqa: E402

CANONICAL = [
    FixtureSpec(name="lgbm_small", framework="lightgbm", n=300, p=8,
                n_trees=100, depth=4, seed=42),
    FixtureSpec(name="xgb_small", framework="xgboost", n=250, p=6,
                n_trees=60, depth=3, seed=7, base_score=0.5),
]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-root", default=str(Path(__file__).parent.parent /
                                              "fixtures"))
    ap.add_argument("--from-specs", action="store_true")
    ap.add_argument("--force-builtin", action="store_true",
                    help="use the builtin emitter even if the reference "
                         "framework is importable")
    args = ap.parse_args()
    out_root = Path(args.out_root)

    if args.from_specs:
        specs = []
        for spec_file in sorted(out_root.glob("*/spec.json")):
            spec, generator = load_spec(spec_file)
            specs.append((spec, generator == "builtin-emitter"))
    else:
        specs = [(s, args.force_builtin) for s in CANONICAL]

    for spec, force_builtin in specs:
        res = generate_fixture(spec, out_root, force_builtin=force_builtin)
        print(f"{spec.name}: {res['generator']} -> {res['model']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
