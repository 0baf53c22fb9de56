"""Module entry point, so ``python -m figgen`` matches the console script."""
import sys

from figgen.cli import main

if __name__ == "__main__":
    sys.exit(main())
