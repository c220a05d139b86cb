"""Milnor invariants of welded links and string links.

Submodules:

* :mod:`weldmilnor.algebra` -- free groups, truncated Magnus expansion, Lyndon basis
* :mod:`weldmilnor.diagram` -- Gauss diagrams, Wirtinger presentations, moves
* :mod:`weldmilnor.arrows` -- w-trees, expansion, surgery and arrow moves
* :mod:`weldmilnor.invariants` -- Chen map, Milnor tables, canonical forms
"""

__version__ = "0.1.0"
