#!/usr/bin/env python3
"""
Command-line entry point for the algcomm workbench.
Puts backend/ on the Python path and runs main.main().
"""

import sys
import os

# Add backend directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'backend'))

from main import main

if __name__ == '__main__':
    sys.exit(main())
