import sys

from lshmc.cli import main


sys.exit(main())
