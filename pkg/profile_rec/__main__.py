import sys

from profile_rec.main import main

sys.exit(main())
