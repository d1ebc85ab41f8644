import sys

from codedgossip.cli import main

sys.exit(main())
