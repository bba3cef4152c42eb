import sys

from pysmurf.cli import main

sys.exit(main())
