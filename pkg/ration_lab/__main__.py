"""
python -m ration_lab
"""
import sys

from ration_lab.cli.main import configure_logging, main

if __name__ == "__main__":
    configure_logging()
    sys.exit(main())
