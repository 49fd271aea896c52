"""Checked-in case files of the verification benchmarks (JSON, one case per file)."""
