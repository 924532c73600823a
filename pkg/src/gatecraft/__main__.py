import sys

from gatecraft.cli import main

sys.exit(main())
