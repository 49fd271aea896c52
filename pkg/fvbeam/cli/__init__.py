"""Command-line entry points for fvbeam."""
