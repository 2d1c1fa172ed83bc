#!/usr/bin/env python3
import os
import sys

# Add src directory to Python path for imports
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from cli.commands import main

if __name__ == '__main__':
    sys.exit(main())
