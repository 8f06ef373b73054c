from liplab.cli import main
import sys

sys.exit(main())
