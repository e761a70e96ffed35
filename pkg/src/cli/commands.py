"""Command handlers: each one runs a workflow and prints a machine-readable summary."""

import argparse
import sys
from typing import TextIO

from src.cli.deps import get_run_config, get_workflow_service
from src.cli.errors_handler import EXIT_OK
from src.persistances.storage import atomic_write
from src.services.detector import DetectionResult
from src.services.workflow_service import DatasetPaths


def _print_counts(prefix: str, counts: dict[str, int]) -> None:
    for name, count in counts.items():
        print(f"{prefix}.{name}: {count}")


# trajnorm synth
def cmd_synth(args: argparse.Namespace) -> int:
    """Write a synthetic annotation file."""
    config = get_run_config(args)
    summary = get_workflow_service().synth(config, out=args.out)
    print(f"annotations: {summary.path}")
    print(f"records: {summary.record_count}")
    print(f"objects: {summary.object_count}")
    return EXIT_OK


# trajnorm ingest [annotations]
def cmd_ingest(args: argparse.Namespace) -> int:
    """Annotations to a normal corpus."""
    config = get_run_config(args)
    summary = get_workflow_service().ingest(config, annotations=args.annotations, out=args.out)
    print(f"corpus: {summary.path}")
    print(f"tracks: {summary.track_count}")
    _print_counts("tracks", summary.extraction.class_counts())
    print(f"skipped_objects: {summary.extraction.skipped_count}")
    print(f"samples: {summary.sample_count}")
    _print_counts("samples", summary.corpus.class_counts())
    return EXIT_OK


# trajnorm gen-abnormal [annotations]
def cmd_gen_abnormal(args: argparse.Namespace) -> int:
    """Straight-line and realistic abnormal corpus."""
    config = get_run_config(args)
    summary = get_workflow_service().generate_abnormal(
        config, annotations=args.annotations, out=args.out
    )
    print(f"corpus: {summary.path}")
    print(f"samples: {len(summary.corpus)}")
    _print_counts("source", summary.counts_by_source)
    return EXIT_OK


# trajnorm train [corpus] --method {dae,vae,if}
def cmd_train(args: argparse.Namespace) -> int:
    """Train a detector (or a baseline) on a normal corpus."""
    config = get_run_config(args)
    summary = get_workflow_service().train(config, corpus=args.corpus, out=args.out)
    print(f"method: {summary.method.value}")
    for key, value in summary.hyperparameters.items():
        print(f"param.{key}: {value}")
    history = summary.history
    if history is not None:
        print(f"best_epoch: {history.best_epoch}")
        print("epoch,train_loss,cv_loss")
        for epoch, (train_loss, cv_loss) in enumerate(
            zip(history.train_loss, history.cv_loss), start=1
        ):
            print(f"{epoch},{train_loss:.17g},{cv_loss:.17g}")
    print(f"threshold: {summary.threshold:.17g}")
    print(f"model: {summary.path}")
    print(f"digest: {summary.digest}")
    return EXIT_OK


def write_decisions(result: DetectionResult, handle: TextIO) -> None:
    handle.write("index,score,threshold,decision\n")
    for index, (value, decision) in enumerate(zip(result.scores, result.decisions)):
        handle.write(f"{index},{value:.17g},{result.threshold:.17g},{decision.value}\n")


# trajnorm detect [model] [corpus]
def cmd_detect(args: argparse.Namespace) -> int:
    """One line per sample: index, score, threshold, decision."""
    config = get_run_config(args)
    result = get_workflow_service().detect(config, corpus=args.corpus, model=args.model)
    if args.out:
        with atomic_write(args.out) as handle:
            write_decisions(result, handle)
    else:
        write_decisions(result, sys.stdout)
    return EXIT_OK


# trajnorm eval [--dataset NAME NORMAL ABNORMAL]...
def cmd_eval(args: argparse.Namespace) -> int:
    """Repeated evaluation of every configured method and the comparison report."""
    config = get_run_config(args)
    if args.method:
        config = config.with_methods([args.method])
    datasets = [DatasetPaths(*values) for values in args.dataset or []]
    summary = get_workflow_service().evaluate(config, datasets=datasets, report=args.out)
    for row in summary.aggregates:
        print(
            f"{row.dataset},{row.status.value},{row.method.label},size={row.size},"
            f"tpr={row.tpr_mean:.2f}+-{row.tpr_std:.2f},fpr={row.fpr_mean:.2f}+-{row.fpr_std:.2f}"
        )
    for key, path in summary.model_paths.items():
        print(f"best_model.{key}: {path} {summary.model_digests[key]}")
    print(f"report: {summary.report_path}")
    return EXIT_OK


# trajnorm show-config
def cmd_show_config(args: argparse.Namespace) -> int:
    """Print the normalized configuration and its digest."""
    config = get_run_config(args)
    text, digest = get_workflow_service().show_config(config)
    print(text, end="")
    print(f"# digest: {digest}")
    return EXIT_OK
