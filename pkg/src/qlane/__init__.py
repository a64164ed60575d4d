"""Quantum-assisted shadow detection and lane-direction pipeline."""

__version__ = "0.1.0"
