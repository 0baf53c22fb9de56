"""Allow ``python -m covloc`` as an alias for the console script."""
import sys

from covloc.cli import main

if __name__ == "__main__":
    sys.exit(main())
