"""
Recurrence Lab - command line entry point

    python recurrence_lab.py run presets/thm1-renewal.json
    python recurrence_lab.py verify kac --alpha 1.5 --samples 100000
    python recurrence_lab.py list-systems
"""

import argparse
import logging
import sys

import config
from models.systems import list_systems
from utils.checks import CHECKS, all_passed, format_report, verify
from utils.errors import ConfigError, RecurrenceLabError, UnknownCheck
from utils.experiments import format_run_report, load_config, run

logger = logging.getLogger('recurrence_lab')

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f'{self.prog}: error: {message}\n')
        sys.exit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog='recurrence-lab',
                     description='Entry and return time statistics of measure-preserving systems')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='no progress bars')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    run_cmd = sub.add_parser('run', help='run an experiment config')
    run_cmd.add_argument('config', help='JSON experiment config')

    verify_cmd = sub.add_parser('verify', help='run one verification check')
    verify_cmd.add_argument('check', help=f"one of {', '.join(CHECKS)}")
    verify_cmd.add_argument('--alpha', type=float, default=None)
    verify_cmd.add_argument('--samples', type=int, default=None)
    verify_cmd.add_argument('--seed', type=int, default=None)
    verify_cmd.add_argument('--workers', type=int, default=config.WORKERS)

    sub.add_parser('list-systems', help='list the supported system families')
    return parser


def setup_logging(verbose=False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    progress = not args.quiet and sys.stderr.isatty()

    try:
        if args.command == 'list-systems':
            for name, params, description in list_systems():
                print(f"{name:<18} {params:<38} {description}")
            return EXIT_PASS

        if args.command == 'run':
            cfg = load_config(args.config)
            report = run(cfg, progress=progress)
            print(format_run_report(report))
            logger.info("✓ wrote %d files to %s", len(report.files), cfg.output)
            return EXIT_PASS if report.passed else EXIT_FAIL

        if args.workers < 1:
            raise ConfigError('--workers must be >= 1')
        results = verify(args.check, alpha=args.alpha, samples=args.samples, seed=args.seed,
                         workers=args.workers, progress=progress)
        print(format_report(results))
        return EXIT_PASS if all_passed(results) else EXIT_FAIL

    except (ConfigError, UnknownCheck) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except RecurrenceLabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
