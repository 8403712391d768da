import sys

from gpp.main import main

sys.exit(main())
