"""Command-line entry point: ``esefn {train,evaluate,ablate,sweep,gradcheck}``.

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .ablation import VARIANTS, parse_variants
from .checkpoint import load_checkpoint, save_checkpoint
from .data import SynthSpec, generate_xor_pair, load_feature_set, train_test_split
from .errors import ConfigurationError, EseFnError
from .experiments import (
    DEFAULT_ALPHAS,
    DEFAULT_BETAS,
    Dataset,
    ablation_csv,
    gradcheck_model,
    run_ablation,
    run_sweep,
    sweep_csv,
    train_esefn,
)
from .fusion import LossWeights
from .trainer import OptimConfig, evaluate

log = logging.getLogger("esefn")


class UsageFailure(Exception):
    """Flag combination rejected after argparse accepted it."""


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _data_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("data")
    g.add_argument("--synthetic", choices=["xor"], help="generate the XOR-pair dataset")
    g.add_argument("--rgb-features", type=Path, metavar="PATH")
    g.add_argument("--skel-features", type=Path, metavar="PATH")
    g.add_argument("--noise", type=float, default=0.1, help="synthetic noise sigma")
    g.add_argument("--samples-per-class", type=int, default=100)
    g.add_argument("--test-fraction", type=float, default=0.25)
    g.add_argument("--seed", type=int, default=7)
    return p


def _model_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model and optimisation")
    g.add_argument("--d", type=int, default=16, help="fused feature dimension")
    g.add_argument("--epochs", type=int, default=30)
    g.add_argument("--batch", type=int, default=32)
    g.add_argument("--lr", type=float, default=0.1)
    g.add_argument("--momentum", type=float, default=0.9)
    g.add_argument("--decay", type=float, default=1e-4)
    g.add_argument("--alpha", type=float, default=0.7)
    g.add_argument("--beta", type=float, default=0.3)
    g.add_argument("--out", type=Path, default=Path("runs"))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esefn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    data, model = _data_flags(), _model_flags()

    sub.add_parser("train", parents=[data, model], help="train the full network, write report CSV and checkpoint")

    ev = sub.add_parser("evaluate", parents=[data], help="accuracy of a saved checkpoint on the test split")
    ev.add_argument("--checkpoint", type=Path, required=True)

    ab = sub.add_parser("ablate", parents=[data, model], help="train ablation variants and tabulate accuracy")
    ab.add_argument("--variants", default=",".join(VARIANTS), help="comma-separated ids, e.g. B1,B2,B3")

    sw = sub.add_parser("sweep", parents=[data, model], help="grid over the loss weights alpha and beta")
    sw.add_argument("--alphas", type=_float_list, default=list(DEFAULT_ALPHAS))
    sw.add_argument("--betas", type=_float_list, default=list(DEFAULT_BETAS))

    gc = sub.add_parser("gradcheck", help="compare backward with finite differences per parameter group")
    gc.add_argument("--d", type=int, default=16)
    gc.add_argument("--classes", type=int, default=4)
    gc.add_argument("--batch", type=int, default=4)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--tolerance", type=float, default=1e-4)
    return parser


def load_dataset(args) -> Dataset:
    files = args.rgb_features is not None or args.skel_features is not None
    if files and args.synthetic:
        raise UsageFailure("choose either --synthetic or --rgb-features/--skel-features")
    if files:
        if args.rgb_features is None or args.skel_features is None:
            raise UsageFailure("--rgb-features and --skel-features must be given together")
        samples, num_classes = load_feature_set(args.rgb_features, args.skel_features)
    elif args.synthetic == "xor":
        spec = SynthSpec(noise_sigma=args.noise, samples_per_class=args.samples_per_class, seed=args.seed)
        samples, num_classes = generate_xor_pair(spec), spec.num_classes
    else:
        raise UsageFailure("no data: pass --synthetic xor or --rgb-features/--skel-features")
    train, test = train_test_split(samples, args.test_fraction, args.seed)
    return Dataset(train, test, num_classes)


def _optim(args) -> OptimConfig:
    return OptimConfig(args.lr, args.momentum, args.decay, args.batch, args.epochs, args.seed)


def _print_table(header, rows) -> None:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    for row in (header, *rows):
        print("  ".join(str(x).ljust(w) for x, w in zip(row, widths)))


def cmd_train(args) -> int:
    optim, weights = _optim(args), LossWeights(args.alpha, args.beta)
    data = load_dataset(args)
    model, report = train_esefn(data, args.d, optim, weights)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "report.csv").write_text(report.to_csv(), encoding="utf-8", newline="\n")
    save_checkpoint(model, args.out / "model.ckpt")
    for head, acc in report.test_accuracy.items():
        print(f"test accuracy {head}: {acc:.4f}")
    print(f"wrote {args.out / 'report.csv'} and {args.out / 'model.ckpt'}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_checkpoint(args.checkpoint)
    data = load_dataset(args)
    for head, acc in evaluate(model, data.test).items():
        print(f"test accuracy {head}: {acc:.4f}")
    return 0


def cmd_ablate(args) -> int:
    variants = parse_variants(args.variants)
    optim, weights = _optim(args), LossWeights(args.alpha, args.beta)
    data = load_dataset(args)
    rows = run_ablation(data, variants, args.d, optim, weights)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "ablation.csv").write_text(ablation_csv(rows), encoding="utf-8", newline="\n")
    mark = {True: "x", False: ""}
    _print_table(
        ("variant", "rgb", "skeleton", "m-fusion", "c-fusion", "ML", "expansion", "test acc"),
        [
            (r.variant.id, mark[r.variant.uses_rgb], mark[r.variant.uses_skeleton], mark[r.variant.uses_mnet],
             mark[r.variant.uses_cnet], mark[r.variant.uses_ml], mark[r.variant.uses_expansion], f"{r.test_acc:.4f}")
            for r in rows
        ],
    )
    return 0


def cmd_sweep(args) -> int:
    data = load_dataset(args)
    cells = run_sweep(data, args.d, _optim(args), args.alphas, args.betas)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sweep.csv").write_text(sweep_csv(cells), encoding="utf-8", newline="\n")
    _print_table(
        ("alpha", "beta", "test acc"),
        [(c.alpha, c.beta, "skipped" if c.skipped else f"{c.test_acc:.4f}") for c in cells],
    )
    return 0


def cmd_gradcheck(args) -> int:
    errors = gradcheck_model(d=args.d, num_classes=args.classes, batch=args.batch, seed=args.seed)
    failed = [g for g, e in errors.items() if not e < args.tolerance]
    for group, err in errors.items():
        status = "FAIL" if group in failed else "ok"
        print(f"{group:<16} max rel err {err:.3e}  {status}")
    print(f"worst {max(errors.values()):.3e} vs tolerance {args.tolerance:g}: {'FAIL' if failed else 'PASS'}")
    return 1 if failed else 0


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageFailure, ConfigurationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"esefn: error: {exc}", file=sys.stderr)
        return 2
    except (EseFnError, OSError) as exc:
        print(f"esefn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
