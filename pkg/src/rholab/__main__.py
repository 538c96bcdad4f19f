import sys

from rholab.cli import main

sys.exit(main())
