"""Train every ablation variant on the XOR-pair task and print the accuracy table.

    python3 scripts/run_ablation.py --epochs 200 --out runs/ablation
"""

import argparse
import time
from pathlib import Path

from esefn.ablation import VARIANTS, parse_variants
from esefn.data import SynthSpec, generate_xor_pair, train_test_split
from esefn.experiments import Dataset, ablation_csv, run_ablation
from esefn.fusion import LossWeights
from esefn.trainer import OptimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--variants", default=",".join(VARIANTS))
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--d", type=int, default=16)
    ap.add_argument("--out", type=Path, default=Path("runs/ablation"))
    args = ap.parse_args()

    spec = SynthSpec(noise_sigma=args.noise, seed=args.seed)
    train, test = train_test_split(generate_xor_pair(spec), 0.25, args.seed)
    data = Dataset(train, test, spec.num_classes)
    optim = OptimConfig(epochs=args.epochs, seed=args.seed)

    rows = []
    for variant in parse_variants(args.variants):
        t0 = time.perf_counter()
        rows += run_ablation(data, [variant], args.d, optim, LossWeights())
        print(f"{variant.id:<4} test acc {rows[-1].test_acc:.3f}  ({time.perf_counter() - t0:.1f}s)", flush=True)

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "ablation.csv").write_text(ablation_csv(rows))
    print(f"wrote {args.out / 'ablation.csv'}")


if __name__ == "__main__":
    main()
