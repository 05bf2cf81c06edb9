"""Scattering-transform features for auditory attention decoding, with the
supporting cost, audit, evaluation and statistics tools."""

__version__ = "0.1.0"
