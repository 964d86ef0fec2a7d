"""
FairBNI: fair policy learning under bipartite network interference
Main entry point
"""
import logging
import sys
import os

# Add scripts directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'scripts'))

from cli import build_parser, run

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose=False, quiet=False):
    """Configure the root logger from the verbosity flags"""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)


def main():
    """Main command function"""
    parser = build_parser()
    args = parser.parse_args()
    configure_logging(args.verbose, args.quiet)
    sys.exit(run(args, parser))


if __name__ == "__main__":
    main()
