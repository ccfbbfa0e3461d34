"""CLI tool for adaresnet-mini."""
import argparse
import json
import logging
import sys

from .settings import DEFAULT_ROUNDS
from .utils.logging import get_logger

DEFAULT_COMPARE_MODES = ["fixed:1", "fixed:2", "unified", "per-type", "per-block"]


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by train and compare; None means 'not given' so lower-priority sources apply."""
    parser.add_argument("--dataset", choices=["mnist", "cifar10"], help="Dataset name")
    parser.add_argument("--init-weight", type=float, dest="init_weight", help="Initial skip-weight value")
    parser.add_argument("--epochs", type=int, help="Number of epochs")
    parser.add_argument("--batch-size", type=int, dest="batch_size", help="Mini-batch size")
    parser.add_argument("--lr", type=float, help="Learning rate")
    parser.add_argument("--optimizer", choices=["sgd", "adam"], help="Optimizer")
    parser.add_argument("--seed", type=int, help="Base seed")
    parser.add_argument("--subsample", type=int, help="Stratified training subset size (0 = full split)")
    parser.add_argument("--test-subsample", type=int, dest="test_subsample", help="Stratified test subset size")
    parser.add_argument("--data-dir", dest="data_dir", help="Dataset root (falls back to ADARESNET_DATA_DIR)")
    parser.add_argument("--out", dest="out_dir", help="Output directory")
    parser.add_argument("--config", help="Config file (KEY=value lines or YAML)")
    parser.add_argument("--strict", action="store_true", help="Fail on unknown config-file keys")
    parser.add_argument("--timing", action="store_true", default=None, dest="record_timing",
                        help="Write wall-clock seconds to metrics.csv")


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="adaresnet-mini: residual networks with trainable skip weights"
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only log warnings and errors")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    # Train command
    train_parser = subparsers.add_parser("train", help="Train one model")
    _add_run_arguments(train_parser)
    train_parser.add_argument("--mode", help="Skip mode: fixed:<c>, unified, per-type or per-block")
    train_parser.add_argument("--plain", action="store_true", help="Plain residual blocks (implies fixed:1)")

    # Compare command
    compare_parser = subparsers.add_parser("compare", help="Compare skip modes over several rounds")
    _add_run_arguments(compare_parser)
    compare_parser.add_argument("--mode", action="append", dest="modes",
                                help=f"Mode to compare, repeatable (default: {' '.join(DEFAULT_COMPARE_MODES)})")
    compare_parser.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS, help="Rounds per mode")
    compare_parser.add_argument("--workers", type=int, default=1, help="Parallel worker processes")

    # Weights command
    weights_parser = subparsers.add_parser("weights", help="Print the skip weights stored in a checkpoint")
    weights_parser.add_argument("checkpoint", help="Path to model.ckpt")
    weights_parser.add_argument("--format", choices=["text", "json", "csv"], default="text")

    # Analyze command
    analyze_parser = subparsers.add_parser("analyze", help="Variance analysis of two weight tables")
    analyze_parser.add_argument("tables", nargs=2, help="weights.csv paths or fixture names")
    analyze_parser.add_argument("--format", choices=["text", "json", "yaml"], default="text")

    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(1)

    logger = get_logger()
    if args.verbose:
        logger.set_level(logging.DEBUG)
    elif args.quiet:
        logger.set_level(logging.WARNING)

    try:
        if args.command == "train":
            cmd_train(args)
        elif args.command == "compare":
            cmd_compare(args)
        elif args.command == "weights":
            cmd_weights(args)
        elif args.command == "analyze":
            cmd_analyze(args)
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)


def _cli_values(args, *extra: str) -> dict:
    keys = [
        "dataset", "init_weight", "epochs", "batch_size", "lr", "optimizer", "seed",
        "subsample", "test_subsample", "data_dir", "out_dir", "record_timing", *extra,
    ]
    return {key: getattr(args, key, None) for key in keys}


def cmd_train(args):
    from .experiment.config import resolve_config
    from .experiment.train import train

    cli = _cli_values(args, "mode")
    if args.plain:
        cli["plain_residual"] = True
        cli["mode"] = "fixed:1"
    config, origins = resolve_config(cli=cli, config_file=args.config, strict=args.strict)
    result = train(config, origins=origins)
    final = result.metrics[-1]
    print(f"test_acc={final.test_acc:.4f} train_acc={final.train_acc:.4f} train_loss={final.train_loss:.6f}")
    for weight in result.weights:
        print(f"  {weight.site}: {weight.value:.6f}")
    print(f"Artifacts written to {result.out_dir}")


def cmd_compare(args):
    from .experiment.compare import compare_modes
    from .experiment.config import resolve_config

    config, _ = resolve_config(cli=_cli_values(args), config_file=args.config, strict=args.strict)
    comparison = compare_modes(config, args.modes or DEFAULT_COMPARE_MODES, args.rounds, workers=args.workers)
    print("\n".join(comparison.summary_lines()))


def cmd_weights(args):
    from .nn.checkpoint import read_checkpoint
    from .nn.model import extract_skip_weights

    checkpoint = read_checkpoint(args.checkpoint)
    weights = extract_skip_weights(checkpoint.model)
    if args.format == "json":
        print(json.dumps(
            {
                "mode": str(checkpoint.model.config.mode),
                "weights": [
                    {"site": w.site, "value": w.value, "trainable": w.trainable, "parameter": w.parameter}
                    for w in weights
                ],
            },
            indent=2,
        ))
    elif args.format == "csv":
        print("site,value")
        for w in weights:
            print(f"{w.site},{w.value!r}")
    else:
        print(f"mode: {checkpoint.model.config.mode}")
        for w in weights:
            print(f"  {w.site}: {w.value:.6f}{'' if w.trainable else ' (fixed)'}")


def cmd_analyze(args):
    from .analysis.variance import analyze

    report = analyze(args.tables)
    if args.format == "json":
        print(report.to_json())
    elif args.format == "yaml":
        print(report.to_yaml())
    else:
        print(report.to_text())


if __name__ == "__main__":
    main()
