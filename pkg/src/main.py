"""Main entry point for the trajnorm command line."""

import logging
import sys
from collections.abc import Sequence

from src.cli.app import create_parser
from src.cli.errors_handler import handle_error
from src.config.settings import get_settings
from src.services.exceptions import TrajnormError


def configure_logging() -> None:
    # Configuration du logging (stderr, stdout reste aux résultats)
    settings = get_settings()
    logging.basicConfig(level=settings.log_level, format=settings.log_format, stream=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the command and return its exit status."""
    configure_logging()
    args = create_parser().parse_args(argv)
    try:
        return args.handler(args)
    except TrajnormError as error:
        return handle_error(error)


if __name__ == "__main__":
    sys.exit(main())
