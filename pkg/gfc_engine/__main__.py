import sys

from gfc_engine.cli import main

sys.exit(main())
