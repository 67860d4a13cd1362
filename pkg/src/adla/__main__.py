import sys

from adla.cli import main

sys.exit(main())
