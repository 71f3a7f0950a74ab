"""Run the command-line interface via ``python -m jointfold``."""

import sys

from .cli import main

sys.exit(main())
