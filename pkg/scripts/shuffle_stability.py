"""Shuffle the example sets of a fixed problem and measure how much scores move.

Prints, for each architecture, how many of the trials changed any score and
the largest absolute change.  Untrained weights suffice: invariance is a
property of the architecture.
"""
import argparse

import numpy as np

from nces.nn import ModelConfig, build_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--d", type=int, default=40)
    ap.add_argument("--classes", type=int, default=22)
    ap.add_argument("--L", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    pos, neg = rng.standard_normal((12, args.d)), rng.standard_normal((9, args.d))
    for arch in ("st", "lstm", "gru"):
        model = build_model(ModelConfig(arch, args.d, args.classes, args.L), seed=args.seed)
        ref = model.predict([(pos, neg)])
        changed, worst = 0, 0.0
        for _ in range(args.trials):
            out = model.predict([(pos[rng.permutation(len(pos))], neg[rng.permutation(len(neg))])])
            changed += not np.array_equal(out, ref)
            worst = max(worst, float(np.abs(out - ref).max()))
        print(f"{arch:5} changed {changed:3d}/{args.trials}  max |delta| {worst:.3e}")


if __name__ == "__main__":
    main()
