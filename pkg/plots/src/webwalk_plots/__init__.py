"""Figure scripts over webwalk result directories.

The package reads the run's CSV files only; it never imports webwalk.
"""
