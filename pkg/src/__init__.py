"""
charflow - Characteristic flows of Hamiltonian structures on closed 3-manifolds

Numerical evidence for the interplay of the self-linking number, unique ergodicity
of the characteristic foliation and contact type, on a catalog of explicit models.
"""

__version__ = "0.1.0"
__author__ = "charflow developers"
