"""crudecast: screen daily media signals and forecast crude-oil prices with ARIMA/ARIMAX."""

__version__ = "0.1.0"
