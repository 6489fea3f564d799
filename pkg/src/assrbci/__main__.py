import sys

from assrbci.cli import main

sys.exit(main())
