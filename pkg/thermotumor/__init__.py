"""Non-isothermal Allen-Cahn tumor growth simulator"""

__version__ = "1.0.0"
