"""First-passage percolation on finite boxes of Z^d: coupled weight fields, geodesics and fluctuation experiments."""

__version__ = "0.1.0"
