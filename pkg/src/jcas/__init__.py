"""Joint communication and sensing over a thermal-loss bosonic channel."""

__version__ = "0.1.0"
