"""Alpha-potential game solver for decentralized CAV control."""

__version__ = "0.1.0"
