import sys

from sphdir.cli import main

sys.exit(main())
