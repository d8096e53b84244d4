"""Local surface-area estimators on digitized solids and their variance under random lattice shifts."""

__version__ = "0.1.0"
