"""
Command-line surface
"""
from .commands import COMMANDS, main
from .parser import build_parser

__all__ = ["COMMANDS", "main", "build_parser"]
