"""Normal-form machinery for the cubic NLS on a large torus."""

__version__ = "0.1.0"
