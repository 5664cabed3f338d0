"""Allow ``python -m vna_calculus``."""

import sys

from .cli import main

sys.exit(main())
