import sys

from epsilite.cli import main

sys.exit(main())
