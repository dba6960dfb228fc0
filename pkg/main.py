import sys
import logging
from typing import List, Optional

from cli.commands import build_parser, run_command
from core.config import AppConfig
from core.exceptions import (
    ApplicationError, FormatError, ImageError, MissingWeightError, ResourceNotFoundError,
    ValidationError, handle_exception,
)
from utils.logging_utils import setup_logging

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3


def exit_code_for(error: ApplicationError) -> int:
    """Map an application error onto the process exit code."""
    if isinstance(error, (FormatError, MissingWeightError)):
        return EXIT_FORMAT
    if isinstance(error, (ValidationError, ImageError, ResourceNotFoundError)):
        return EXIT_USAGE
    return EXIT_FAILURE


class Application:
    def __init__(self, argv: Optional[List[str]] = None):
        self.argv = sys.argv[1:] if argv is None else list(argv)
        self.config = AppConfig()
        self.parser = build_parser()
        self.args = None
        self.logger = logging.getLogger(__name__)

    def setup_logging(self):
        """Initialize logging configuration"""
        self.config.log_level = getattr(logging, self.args.log_level)
        self.config.log_json = self.args.log_json
        setup_logging(
            log_path=self.args.log_file,
            level=self.config.log_level,
            max_bytes=self.config.log_max_bytes,
            backup_count=self.config.log_backup_count,
            json_format=self.config.log_json
        )
        self.logger = logging.getLogger(__name__)

    def parse_arguments(self) -> int:
        """Parse the command line; argparse reports usage errors itself."""
        try:
            self.args = self.parser.parse_args(self.argv)
            return EXIT_OK
        except SystemExit as e:
            return EXIT_USAGE if e.code else EXIT_OK

    def run(self) -> int:
        """Main application execution"""
        code = self.parse_arguments()
        if self.args is None:
            return code
        self.setup_logging()
        try:
            return run_command(self.args, self.config)
        except OSError as e:
            error = handle_exception(e)
            self.logger.error(f"{error.message}")
            print(f"error: {error.message}", file=sys.stderr)
            return EXIT_USAGE
        except Exception as e:
            error = handle_exception(e)
            code = exit_code_for(error)
            if code == EXIT_FAILURE:
                self.logger.critical(f"Fatal error: {e}", exc_info=True)
            else:
                self.logger.error(f"{error.message}")
            print(f"error: {error.message}", file=sys.stderr)
            return code


def main(argv: Optional[List[str]] = None) -> int:
    try:
        app = Application(argv)
        return app.run()
    except Exception as e:
        logging.critical(f"Unhandled exception: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
