"""Allow ``python -m irsbeam`` as an alias for the ``irsbeam`` script."""

import sys

from irsbeam.cli import main

if __name__ == "__main__":
    sys.exit(main())
