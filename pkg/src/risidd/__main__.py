import sys

from risidd.cli import main

sys.exit(main())
