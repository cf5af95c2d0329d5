"""Version information for phasecert."""

__version__ = "0.1.0"
__title__ = "phasecert"
__description__ = "Exact certificates and numerical checks for oscillatory kernels with polynomial phases"
__author__ = "phasecert developers"
__license__ = "MIT"
__copyright__ = "Copyright 2026 phasecert developers"

VERSION_INFO = {
    "version": __version__,
    "name": __title__,
    "description": __description__,
    "author": __author__,
    "license": __license__,
    "features": [
        "Exact polynomial arithmetic over the rationals",
        "Admissibility gate with structured rejection reasons",
        "Sigma-expansion of phases with an independent oracle",
        "Case A / B1 / B2 matrix certificates with re-checks",
        "Seeded property ensembles for the polynomial lemmas",
        "Adaptive quadrature kernel and van der Corput scans",
    ],
}
