import sys

from thermotumor.main import main

sys.exit(main())
