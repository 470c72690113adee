"""Numerical laboratory for spinorial Yamabe-type machinery.

Subpackages are imported lazily by the consumer; nothing heavy happens at
import time.  See the README for the module map and the command line entry
point ``spinlab``.
"""

__version__ = "0.1.0"

__all__ = [
    "clifford",
    "jets",
    "curvature",
    "spinor_fields",
    "quadrature",
    "asymptotics",
    "reduction",
    "dirac_torus",
    "cli",
]
