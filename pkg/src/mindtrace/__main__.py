import sys

from mindtrace.cli import main

sys.exit(main())
