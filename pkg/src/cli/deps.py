"""CLI dependencies: configuration loading and service access."""

import argparse

from src.config.run_config import RunConfig, load_run_config
from src.config.settings import get_settings
from src.di import get_container
from src.di.container import AppContainer
from src.services.workflow_service import WorkflowService


def get_workflow_service() -> WorkflowService:
    """WorkflowService from the application container."""
    container: AppContainer = get_container()
    return container.workflow_service()


def get_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file named by --config (defaults otherwise), with --seed and --method applied.

    Without a config file and without --seed, the seed comes from TRAJNORM_DEFAULT_SEED.
    """
    seed = getattr(args, "seed", None)
    if seed is None and getattr(args, "config", None) is None:
        seed = get_settings().default_seed
    config = load_run_config(getattr(args, "config", None), seed)
    method = getattr(args, "method", None)
    return config.with_method(method) if method else config
