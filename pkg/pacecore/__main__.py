"""Allow ``python -m pacecore``."""

from pacecore.cli import main

raise SystemExit(main())
