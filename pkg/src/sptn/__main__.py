"""Module entry point: ``python -m sptn <command> <config>``."""

from .cli import console_main

console_main()
