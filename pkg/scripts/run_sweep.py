"""Grid over the loss weights (alpha, beta) on the XOR-pair task.

Cells with alpha <= beta are written as skipped.
"""

import argparse
from pathlib import Path

from esefn.data import SynthSpec, generate_xor_pair, train_test_split
from esefn.experiments import DEFAULT_ALPHAS, DEFAULT_BETAS, Dataset, run_sweep, sweep_csv
from esefn.trainer import OptimConfig


def floats(text):
    return [float(x) for x in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=floats, default=list(DEFAULT_ALPHAS))
    ap.add_argument("--betas", type=floats, default=list(DEFAULT_BETAS))
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--out", type=Path, default=Path("runs/sweep"))
    args = ap.parse_args()

    spec = SynthSpec(noise_sigma=args.noise, seed=args.seed)
    train, test = train_test_split(generate_xor_pair(spec), 0.25, args.seed)
    cells = run_sweep(Dataset(train, test, spec.num_classes), 16, OptimConfig(epochs=args.epochs, seed=args.seed),
                      args.alphas, args.betas)

    print("alpha\\beta " + " ".join(f"{b:>7}" for b in args.betas))
    for i, alpha in enumerate(args.alphas):
        row = cells[i * len(args.betas) : (i + 1) * len(args.betas)]
        print(f"{alpha:>10} " + " ".join("      -" if c.skipped else f"{c.test_acc:7.3f}" for c in row))

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sweep.csv").write_text(sweep_csv(cells))


if __name__ == "__main__":
    main()
