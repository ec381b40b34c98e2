import sys

from argus_forge.cli import main

sys.exit(main())
