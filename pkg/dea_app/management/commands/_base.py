"""
Shared plumbing for the dea_app management commands.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 partial failure (some files could not be used, the rest was processed).
"""
import logging
from collections.abc import Iterable
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from dea_app.config import DeaConfig, load_config
from dea_app.errors import ConfigurationError, DeaError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3

# problems listed before the remainder is summarized
MAX_LISTED_ERRORS = 20


class DeaCommand(BaseCommand):
    """Base class: global flags, config loading and error-to-exit-code mapping.

    Subclasses implement `run(config, **options)` and return the per-file
    problems they ran into (an empty list when everything was usable).
    """

    def run_from_argv(self, argv):
        # argparse keluar dengan kode 2 untuk flag salah, dilaporkan sebagai usage error
        self._called_from_command_line = True
        try:
            self.create_parser(argv[0], argv[1]).parse_args(argv[2:])
        except SystemExit as exc:
            raise SystemExit(EXIT_USAGE if exc.code == 2 else exc.code)
        super().run_from_argv(argv)

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key = value file overriding the defaults')
        parser.add_argument('--seed', type=int, help='random seed for synthetic data')
        parser.add_argument('--threads', type=int, help='worker pool size')
        parser.add_argument('--strict', action='store_true',
                            help='treat unknown categories as errors and drop malformed files')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def overrides(self, options) -> dict[str, object]:
        """Configuration keys set from command-line flags."""
        return {}

    def handle(self, *args, **options):
        if options.get('verbosity', 1) >= 2:
            logging.getLogger('dea_app').setLevel(logging.DEBUG)

        flags = {
            'seed': options.get('seed'),
            'threads': options.get('threads'),
            'strict': True if options.get('strict') else None,
        }
        flags.update(self.overrides(options))
        try:
            config = load_config(options.get('config'), flags)
        except ConfigurationError as exc:
            raise CommandError(f"configuration: {exc}", returncode=EXIT_USAGE)

        try:
            run_options = {key: value for key, value in options.items() if key != 'config'}
            problems = list(self.run(config, **run_options) or [])
        except ConfigurationError as exc:
            raise CommandError(f"configuration: {exc}", returncode=EXIT_USAGE)
        except (DeaError, OSError) as exc:
            logger.debug("data error", exc_info=True)
            raise CommandError(str(exc), returncode=EXIT_DATA)

        if problems:
            self.report_problems(problems)
            raise CommandError(f"{len(problems)} file problem(s); results cover the usable inputs",
                               returncode=EXIT_PARTIAL)

    def run(self, config: DeaConfig, **options) -> Iterable | None:
        raise NotImplementedError('subclasses of DeaCommand must provide a run() method')

    def report_problems(self, problems) -> None:
        for problem in problems[:MAX_LISTED_ERRORS]:
            self.stderr.write(self.style.WARNING(str(problem)))
        if len(problems) > MAX_LISTED_ERRORS:
            self.stderr.write(self.style.WARNING(f"... and {len(problems) - MAX_LISTED_ERRORS} more"))

    def require_dir(self, path: str | None, flag: str) -> Path:
        if not path:
            raise CommandError(f"{flag} is required", returncode=EXIT_USAGE)
        directory = Path(path)
        if not directory.is_dir():
            raise CommandError(f"{flag}: {directory} is not a directory", returncode=EXIT_DATA)
        return directory
