"""RIS-assisted symbiotic radio design and link simulation toolkit"""

__version__ = "0.3.0"
