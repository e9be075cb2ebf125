"""heatmon: desk-scale monitoring and analytics stack for municipal heat supply."""

__version__ = "0.1.0"
