import sys

from procscore.cli import main

sys.exit(main())
