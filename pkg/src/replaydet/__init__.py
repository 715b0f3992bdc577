"""Replay-spoofing detection with GMM-UBM back ends over hand-crafted and autoencoder features."""

__version__ = "0.1.0"
