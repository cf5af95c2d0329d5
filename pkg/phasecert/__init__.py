"""phasecert - certificates for oscillatory kernels with polynomial phases"""

from phasecert.__version__ import __author__, __version__

__all__ = ["__author__", "__version__"]
