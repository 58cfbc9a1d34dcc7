"""Monte Carlo laboratory for SI / first-passage spreading with heavy-tailed passage times."""

__version__ = "0.1.0"
