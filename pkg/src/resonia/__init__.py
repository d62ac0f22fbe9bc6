"""Shape-resonance widths for semiclassical Schrodinger operators with a well in an island."""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
