"""Forward-looking equity-correlation forecasting, signed clustering, and
contrarian basket backtesting at desk scale."""

__version__ = "0.1.0"
