"""Quaternion arithmetic, Shimura-curve uniformization and volume bounds."""
__version__ = "0.1.0"
