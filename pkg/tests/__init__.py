"""fvbeam test suite."""
