"""Numerical toolkit for planar billiard dynamics.

Core pieces: arclength-parametrized tables (:mod:`billiards.boundary`),
the billiard map and its differential (:mod:`billiards.phasemap`),
mirror-equation beam focusing as projective dynamics
(:mod:`billiards.beam`), variational periodic-orbit search and
degeneracy detectors (:mod:`billiards.periodic`), the circle chord
identity (:mod:`billiards.identity`), and torus/sphere counterexample
constructions (:mod:`billiards.counterexamples`).
"""

from . import beam, boundary, counterexamples, identity, periodic, phasemap
from .boundary import BoundaryCurve, Chord, chord, chord_differentials, make_table
from .phasemap import OrbitTrace, PhasePoint, iterate, jacobian, step

__version__ = "0.1.0"

__all__ = [
    "BoundaryCurve",
    "Chord",
    "OrbitTrace",
    "PhasePoint",
    "beam",
    "boundary",
    "chord",
    "chord_differentials",
    "counterexamples",
    "identity",
    "iterate",
    "jacobian",
    "make_table",
    "periodic",
    "phasemap",
    "step",
]
