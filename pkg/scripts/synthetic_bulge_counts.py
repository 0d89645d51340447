"""Detection rates of finger and wrist bulges on synthetic hands.

    python3 scripts/synthetic_bulge_counts.py --seeds 100
"""

import argparse
from collections import Counter

from gngiemd.analysis import BulgeKind, detect_bulges, extract_boundary
from gngiemd.gng import GngParams, train_gng
from gngiemd.ingest import synth_hand


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--fingers", type=int, nargs="*", default=list(range(6)))
    args = ap.parse_args()

    print("fingers  finger_rate  wrist_rate  detected_counts")
    for f in args.fingers:
        counts, wrists = Counter(), 0
        for seed in range(args.seeds):
            g = train_gng(synth_hand(f, seed=seed), GngParams(seed=seed))
            kinds = [b.kind for b in detect_bulges(g, extract_boundary(g))]
            counts[sum(k is not BulgeKind.WRIST for k in kinds)] += 1
            wrists += kinds.count(BulgeKind.WRIST) == 1
        print(f"{f:7d}  {counts[f] / args.seeds:11.2f}  {wrists / args.seeds:10.2f}  {dict(sorted(counts.items()))}")


if __name__ == "__main__":
    main()
