"""Train the full model on the XOR-pair task and plot the per-epoch losses (matplotlib optional)."""

import argparse
from pathlib import Path

from esefn.data import SynthSpec, generate_xor_pair, train_test_split
from esefn.experiments import Dataset, train_esefn
from esefn.fusion import LossWeights
from esefn.trainer import OptimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=Path("runs/curve"))
    args = ap.parse_args()

    spec = SynthSpec(seed=args.seed)
    train, test = train_test_split(generate_xor_pair(spec), 0.25, args.seed)
    _, report = train_esefn(Dataset(train, test, spec.num_classes), 16, OptimConfig(epochs=args.epochs, seed=args.seed),
                            LossWeights())
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "report.csv").write_text(report.to_csv())
    print({k: round(v, 4) for k, v in report.test_accuracy.items()})

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    epochs = report.column("epoch")
    for name in ("l_total", "l_r", "l_s", "l_rs"):
        plt.plot(epochs, report.column(name), label=name)
    plt.xlabel("epoch")
    plt.ylabel("loss")
    plt.legend()
    plt.savefig(args.out / "losses.png", dpi=120)
    print(f"wrote {args.out / 'losses.png'}")


if __name__ == "__main__":
    main()
