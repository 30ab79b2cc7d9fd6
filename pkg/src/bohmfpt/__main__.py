import sys

from bohmfpt.cli import main

sys.exit(main())
