"""Membrane-mediated interactions of rigid particles.

Thin layer over the compiled ``_core`` extension. Poses are ``(x1, x2, alpha3)``
triples; shape derivatives come back as flat arrays ordered the same way.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
