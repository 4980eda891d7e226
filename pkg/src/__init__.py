"""atomchip: design and analysis of atom-chip magnetic microtraps"""

__version__ = "1.0.0"
