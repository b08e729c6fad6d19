"""
Main entry point for ribforge
"""
import sys

from ribforge.core.config import apply_thread_limits, settings

# BLAS pools are sized when numpy loads
apply_thread_limits(settings.THREADS)

from ribforge.cli import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
