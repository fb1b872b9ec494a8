import sys

from sphdir.app import create_app
from sphdir.cli import main

app = create_app()

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] or ["serve"]))
