"""
Launch charflow from a source checkout.

    python run_charflow.py scenario scenarios/sphere.toml
    python run_charflow.py lk --model t3_contact --scheme grid --resolution 64
    python run_charflow.py selftest --extended

The process exit code is the command's: 0 ok, 2 configuration error,
3 task or report failure, 4 failed consistency checks.
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
