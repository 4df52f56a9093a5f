"""Two-stage stochastic siting and allocation for oil-spill response."""
__version__ = "0.1.0"
