"""Sub-Finsler Heisenberg Group Toolkit"""

__version__ = "1.0.0"
