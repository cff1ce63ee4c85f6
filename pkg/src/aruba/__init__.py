"""Size-balanced regression-loss weights for aerial object detection."""

__version__ = "0.1.0"
