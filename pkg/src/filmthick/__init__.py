"""Thin-film thickness characterization from reflection/transmission spectra."""

__version__ = "0.1.0"
