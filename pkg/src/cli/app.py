"""Argument parser for the trajnorm command line."""

import argparse

from src.cli import commands
from src.config.settings import get_settings
from src.services.evaluation import Method


def _add_common(parser: argparse.ArgumentParser, with_method: bool = False) -> None:
    parser.add_argument("--config", help="run configuration file (INI)")
    parser.add_argument("--seed", type=int, help="global seed, overrides [run] seed")
    parser.add_argument("--out", help="output path, overrides the configured one")
    if with_method:
        parser.add_argument(
            "--method", choices=[method.value for method in Method], help="detector to use"
        )


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the command-line parser."""
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Abnormal road-user trajectory detection with a deep autoencoder",
    )
    parser.add_argument("--version", action="version", version=settings.app_version)
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="write a synthetic annotation file")
    _add_common(synth)
    synth.set_defaults(handler=commands.cmd_synth)

    ingest = subparsers.add_parser("ingest", help="annotations to a normal corpus")
    _add_common(ingest)
    ingest.add_argument("annotations", nargs="?", help="annotation file")
    ingest.set_defaults(handler=commands.cmd_ingest)

    gen_abnormal = subparsers.add_parser("gen-abnormal", help="generate an abnormal corpus")
    _add_common(gen_abnormal)
    gen_abnormal.add_argument("annotations", nargs="?", help="annotation file of normal tracks")
    gen_abnormal.set_defaults(handler=commands.cmd_gen_abnormal)

    train = subparsers.add_parser("train", help="train a model on a normal corpus")
    _add_common(train, with_method=True)
    train.add_argument("corpus", nargs="?", help="normal corpus file")
    train.set_defaults(handler=commands.cmd_train)

    detect = subparsers.add_parser("detect", help="classify every sample of a corpus")
    _add_common(detect)
    detect.add_argument("model", nargs="?", help="model file")
    detect.add_argument("corpus", nargs="?", help="corpus file")
    detect.set_defaults(handler=commands.cmd_detect)

    evaluate = subparsers.add_parser("eval", help="repeated evaluation and report")
    _add_common(evaluate, with_method=True)
    evaluate.add_argument(
        "--dataset",
        nargs=3,
        action="append",
        metavar=("NAME", "NORMAL", "ABNORMAL"),
        help="dataset to evaluate; repeat for several report rows",
    )
    evaluate.set_defaults(handler=commands.cmd_eval)

    show_config = subparsers.add_parser("show-config", help="print the normalized config")
    _add_common(show_config)
    show_config.set_defaults(handler=commands.cmd_show_config)

    return parser
